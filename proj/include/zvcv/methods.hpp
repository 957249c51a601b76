#pragma once

#include "zvcv/cf.hpp"
#include "zvcv/control_variates.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zvcv {

enum class MethodKind { vanilla, zv, crossval, cf };

/// One post-processing method as named on the command line:
///
///   vanilla
///   zv:Q=2:lasso            zv[:Q=q][:ols|lasso|ridge][:S=1+3][:split][:lambda=x][:relaxed]
///   crossval                crossval[:maxQ=q][:S=1+3]...
///   cf                      cf[:gaussian|poly][:Q=q][:bw=x][:reg=x]
///
/// Subset indices are 1-based in the text form and 0-based in memory.
struct MethodSpec {
    MethodKind kind = MethodKind::vanilla;
    ZvSpec zv;
    CrossvalConfig crossval;
    std::vector<std::vector<Index>> crossval_subsets;
    KernelSpec kernel;
    /// Gaussian bandwidth; absent means 5-fold cross-validation.
    std::optional<double> bandwidth;
    double cf_regulariser = 0.0;

    std::string label() const;
};

MethodSpec parse_method(const std::string& text);
/// Comma-separated list of methods.
std::vector<MethodSpec> parse_method_list(const std::string& text);

struct MethodEstimate {
    double estimate = 0.0;
    std::string label;  // e.g. "l-ZV2", "crossval(ZV1)", "CF"
    std::optional<int> q;
    std::optional<std::string> penalty;
    std::optional<double> lambda;
    std::optional<double> bandwidth;
    bool fallback = false;
};

/// Estimate E[phi] under the weighted sample set with one method. `seed`
/// drives every random split (CV folds, split halves).
MethodEstimate estimate_expectation(const SampleSet& s, const IntegrandValues& phi, const MethodSpec& method,
                                    std::uint64_t seed = 1);

}  // namespace zvcv
