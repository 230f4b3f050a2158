// Tumbling-window sampling over a stream: each window is sampled on its own
// and the per-window sample sizes are printed as CSV.
//
//   stream_windows [file.csv [window_size [target]]]
//
// Without a file a synthetic three-class stream is generated.

#include <cstdlib>
#include <iostream>
#include <set>

#include "pvq/pvq.hpp"

namespace {

pvq::Dataset synthetic(std::size_t n) {
    auto gen = pvq::RandomSource(2024).generator();
    std::vector<double> values;
    pvq::LabelVector labels;
    for (std::size_t i = 0; i < n; ++i) {
        // roughly 90 / 9 / 1 percent
        const auto u = gen.below(100);
        const int cls = u < 90 ? 0 : (u < 99 ? 1 : 2);
        for (int j = 0; j < 4; ++j) values.push_back(6.0 * cls + gen.normal());
        labels.push_back("class" + std::to_string(cls));
    }
    return pvq::Dataset(pvq::DataMatrix(n, 4, std::move(values)), std::move(labels));
}

} // namespace

int main(int argc, char** argv) {
    try {
        const pvq::Dataset stream = argc > 1 ? pvq::ingest::load_delimited(argv[1], pvq::ingest::Schema{})
                                             : synthetic(60'000);
        const std::size_t window = argc > 2 ? std::stoul(argv[2]) : 20'000;
        const std::size_t target = argc > 3 ? std::stoul(argv[3]) : 1'000;

        std::cout << "window,begin,rows,shards,sampled,bound,classes\n";
        std::size_t w = 0;
        for (const auto& range : pvq::ingest::window(stream.rows(), window)) {
            const auto part = pvq::ingest::slice(stream, range);
            const auto scaled = pvq::ingest::fit_scaler(part.features).apply(part.features);
            const auto r = pvq::pvq_to_target(scaled, std::min(target, part.rows()), pvq::som::TrainSchedule{},
                                              pvq::RandomSource(w), pvq::default_workers());
            std::size_t classes = 0;
            if (stream.labels) {
                std::set<std::string> seen;
                for (auto id : r.rows) seen.insert((*stream.labels)[id]);
                classes = seen.size();
            }
            std::cout << w << ',' << range.begin << ',' << range.size() << ',' << r.shard_count << ','
                      << r.rows.size() << ',' << r.size_bound << ',' << classes << '\n';
            ++w;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
