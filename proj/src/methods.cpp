#include "zvcv/methods.hpp"

#include "zvcv/archive.hpp"
#include "zvcv/errors.hpp"

#include <charconv>
#include <sstream>

namespace zvcv {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

int parse_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("invalid integer for " + key + ": " + v);
    return out;
}

double parse_number(const std::string& key, const std::string& v) {
    try {
        return parse_double(v);
    } catch (const Error&) {
        throw ConfigError("invalid number for " + key + ": " + v);
    }
}

std::vector<Index> parse_subset(const std::string& v) {
    std::vector<Index> out;
    for (const auto& part : split(v, '+')) {
        const int k = parse_int("S", part);
        if (k < 1) throw ConfigError("subset indices are 1-based: " + v);
        out.push_back(k - 1);
    }
    if (out.empty()) throw ConfigError("empty subset");
    return out;
}

std::string subset_text(const std::vector<Index>& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "+" : "") + std::to_string(s[i] + 1);
    return out;
}

}  // namespace

std::string MethodSpec::label() const {
    switch (kind) {
        case MethodKind::vanilla: return "vanilla";
        case MethodKind::zv: return zv.label();
        case MethodKind::crossval: return "crossval";
        case MethodKind::cf: return kernel.kind == KernelKind::polynomial ? "CF-poly" + std::to_string(kernel.degree) : "CF";
    }
    return "?";
}

MethodSpec parse_method(const std::string& text) {
    const auto tokens = split(text, ':');
    if (tokens.empty() || tokens[0].empty()) throw ConfigError("empty method name");
    MethodSpec m;
    const std::string& head = tokens[0];
    if (head == "vanilla") m.kind = MethodKind::vanilla;
    else if (head == "zv") m.kind = MethodKind::zv;
    else if (head == "crossval") m.kind = MethodKind::crossval;
    else if (head == "cf") m.kind = MethodKind::cf;
    else throw ConfigError("unknown method: " + head);

    for (std::size_t i = 1; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        const auto eq = tok.find('=');
        const std::string key = tok.substr(0, eq);
        const std::string val = eq == std::string::npos ? "" : tok.substr(eq + 1);
        const bool has_val = eq != std::string::npos;
        auto bad = [&] { return ConfigError("option '" + tok + "' is not valid for method " + head); };

        switch (m.kind) {
            case MethodKind::vanilla: throw bad();
            case MethodKind::zv:
                if (key == "Q" && has_val) m.zv.q = parse_int(key, val);
                else if (!has_val && (key == "ols" || key == "lasso" || key == "ridge")) m.zv.penalty = parse_penalty(key);
                else if (key == "S" && has_val) m.zv.subset = parse_subset(val);
                else if (!has_val && key == "split") m.zv.estimator = EstimatorKind::split;
                else if (!has_val && key == "combined") m.zv.estimator = EstimatorKind::combined;
                else if (key == "lambda" && has_val) m.zv.lambda = parse_number(key, val);
                else if (!has_val && key == "relaxed") m.zv.cv.lasso.relaxed = true;
                else throw bad();
                break;
            case MethodKind::crossval:
                if (key == "maxQ" && has_val) m.crossval.max_q = parse_int(key, val);
                else if (key == "minQ" && has_val) m.crossval.min_q = parse_int(key, val);
                else if (key == "S" && has_val) m.crossval_subsets.push_back(parse_subset(val));
                else if (!has_val && key == "relaxed") m.crossval.inner.lasso.relaxed = true;
                else throw bad();
                break;
            case MethodKind::cf:
                if (!has_val && key == "gaussian") m.kernel.kind = KernelKind::gaussian;
                else if (!has_val && key == "poly") m.kernel.kind = KernelKind::polynomial;
                else if (key == "Q" && has_val) m.kernel.degree = parse_int(key, val);
                else if (key == "bw" && has_val) m.bandwidth = parse_number(key, val);
                else if (key == "reg" && has_val) m.cf_regulariser = parse_number(key, val);
                else throw bad();
                break;
        }
    }
    if (m.kind == MethodKind::zv) {
        if (m.zv.q < 1) throw ConfigError("polynomial order must be at least 1");
        if (m.zv.lambda && m.zv.penalty == Penalty::ols) throw ConfigError("lambda given for an OLS method");
        if (m.zv.lambda && !(*m.zv.lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    }
    if (m.kind == MethodKind::cf) {
        if (m.bandwidth && !(*m.bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
        if (!(m.cf_regulariser >= 0.0)) throw ConfigError("CF regulariser must be nonnegative");
        if (m.kernel.degree < 1) throw ConfigError("polynomial kernel degree must be at least 1");
    }
    return m;
}

std::vector<MethodSpec> parse_method_list(const std::string& text) {
    std::vector<MethodSpec> out;
    for (const auto& part : split(text, ',')) out.push_back(parse_method(part));
    if (out.empty()) throw ConfigError("no methods given");
    return out;
}

MethodEstimate estimate_expectation(const SampleSet& s, const IntegrandValues& phi, const MethodSpec& method,
                                    std::uint64_t seed) {
    if (phi.values.size() != s.count()) throw InvalidInput("integrand length does not match sample count");
    MethodEstimate out;
    switch (method.kind) {
        case MethodKind::vanilla:
            out.estimate = s.weights().dot(phi.values);
            out.label = "vanilla";
            return out;
        case MethodKind::zv: {
            ZvSpec spec = method.zv;
            spec.seed = seed;
            spec.cv.seed = seed;
            const auto r = zvcv_estimate(s, phi, spec);
            out.estimate = r.estimate;
            out.label = spec.label();
            out.q = spec.q;
            out.penalty = to_string(spec.penalty);
            if (spec.penalty != Penalty::ols) out.lambda = r.fit.lambda;
            return out;
        }
        case MethodKind::crossval: {
            CrossvalConfig cfg = method.crossval;
            cfg.seed = seed;
            cfg.inner.seed = seed;
            const auto r = crossval_select(s, phi, default_candidates(method.crossval_subsets), cfg);
            const ZvSpec& chosen = r.selection.chosen;
            out.estimate = r.estimate;
            out.label = "crossval(" + chosen.label() +
                        (chosen.subset ? ",S=" + subset_text(*chosen.subset) : std::string()) + ")";
            out.q = chosen.q;
            out.penalty = to_string(chosen.penalty);
            if (chosen.penalty != Penalty::ols) out.lambda = r.fit.lambda;
            return out;
        }
        case MethodKind::cf: {
            KernelSpec k = method.kernel;
            if (k.kind == KernelKind::gaussian) {
                k.bandwidth = method.bandwidth ? *method.bandwidth
                                               : cf_cv_bandwidth(s, phi, default_bandwidth_grid(), 5, seed,
                                                                 method.cf_regulariser)
                                                     .bandwidth;
                out.bandwidth = k.bandwidth;
            } else {
                out.q = k.degree;
            }
            out.estimate = cf_estimate(s, phi, k, method.cf_regulariser);
            out.label = method.label();
            out.lambda = method.cf_regulariser;
            return out;
        }
    }
    throw InvalidInput("unknown method kind");
}

}  // namespace zvcv
