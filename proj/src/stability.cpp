#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpapml/rng.hpp"
#include "cpapml/stability.hpp"

namespace cpapml::stability {

namespace {

constexpr std::uint64_t kStabTag = 0x73746162ULL;

}  // namespace

std::vector<std::uint8_t> categorical_mask(const Schema& schema) {
    std::vector<std::uint8_t> mask;
    for (const auto& f : schema.features) mask.push_back(f.is_categorical() ? 1 : 0);
    return mask;
}

StabilityReport stability_run(const pipeline::PipelineSpec& spec,
                              const pipeline::HyperAssignment& assignment, const Dataset& d,
                              const StabilityConfig& cfg) {
    if (spec.algo != learners::Algo::lr && spec.algo != learners::Algo::rf)
        throw std::invalid_argument("stability_run: " + learners::to_string(spec.algo) +
                                    " is non-descriptive; use lr or rf");
    if (cfg.n_runs < 1) throw std::invalid_argument("stability_run: n_runs must be >= 1");
    if (cfg.subsample_fraction <= 0.0 || cfg.subsample_fraction >= 1.0)
        throw std::invalid_argument("stability_run: subsample_fraction must be in (0,1)");
    if (cfg.weight_threshold <= 0.0 || cfg.weight_threshold >= 1.0)
        throw std::invalid_argument("stability_run: weight_threshold must be in (0,1)");
    if (!d.has_labels()) throw std::invalid_argument("stability_run: dataset is unlabeled");

    const std::size_t p = d.n_features();
    const auto cat = categorical_mask(d.schema);
    std::vector<std::size_t> counts(p, 0);
    std::vector<double> weight_sum(p, 0.0);
    std::vector<std::size_t> weight_runs(p, 0);  // runs where the feature survived the mask
    int failed = 0;

    for (int r = 0; r < cfg.n_runs; ++r) {
        auto sub = stratified_split(d.labels, 1.0 - cfg.subsample_fraction,
                                    derive_seed(cfg.seed, {kStabTag, static_cast<std::uint64_t>(r)}))
                       .train_rows;
        std::vector<int> sub_labels;
        for (std::size_t i : sub) sub_labels.push_back(d.labels[i]);
        pipeline::FittedPipeline fitted;
        try {
            fitted = pipeline::fit_pipeline(spec, assignment, d.values.select_rows(sub), sub_labels,
                                            cat, derive_seed(cfg.seed, {kStabTag,
                                                                        static_cast<std::uint64_t>(r), 1}));
        } catch (const std::exception&) {
            ++failed;
            continue;
        }
        // Per-run max-abs normalization of the model weights.
        auto w = fitted.model->raw_weights();
        double top = 0.0;
        for (double v : w) top = std::max(top, std::abs(v));
        // Map model columns back to raw features: variance filter, then mask.
        auto post_variance = preprocess::kept_indices(fitted.variance);
        auto selected = selection::mask_indices(fitted.selector_mask);
        for (std::size_t m = 0; m < selected.size(); ++m) {
            std::size_t raw = post_variance[selected[m]];
            double norm = top > 0.0 ? std::abs(w[m]) / top : 0.0;
            weight_sum[raw] += norm;
            ++weight_runs[raw];
            if (norm > cfg.weight_threshold) ++counts[raw];
        }
    }

    StabilityReport rep;
    rep.n_runs = cfg.n_runs;
    rep.failed_runs = failed;
    for (std::size_t j = 0; j < p; ++j) {
        FeatureStability fs;
        fs.feature = d.schema.features[j].name;
        fs.selection_count = counts[j];
        fs.stability = static_cast<double>(counts[j]) / static_cast<double>(cfg.n_runs);
        fs.mean_weight = weight_runs[j] > 0 ? weight_sum[j] / static_cast<double>(weight_runs[j]) : 0.0;
        rep.entries.push_back(fs);
    }
    std::stable_sort(rep.entries.begin(), rep.entries.end(),
                     [](const FeatureStability& a, const FeatureStability& b) {
                         if (a.stability != b.stability) return a.stability > b.stability;
                         return a.mean_weight > b.mean_weight;
                     });
    return rep;
}

std::vector<FeatureStability> render_feature_ranking(const StabilityReport& r, std::size_t top_k) {
    std::vector<FeatureStability> out(r.entries.begin(),
                                      r.entries.begin() +
                                          static_cast<std::ptrdiff_t>(std::min(top_k, r.entries.size())));
    return out;
}

}  // namespace cpapml::stability
