#include "zvcv/efficiency.hpp"

#include "zvcv/archive.hpp"
#include "zvcv/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>

namespace zvcv {

namespace {

double ratio(double num, double den, bool& capped) {
    capped = false;
    if (num == 0.0 && den == 0.0) return 1.0;
    if (den == 0.0 || num / den > efficiency_cap) {
        capped = true;
        return efficiency_cap;
    }
    return num / den;
}

}  // namespace

std::vector<EfficiencyRow> compute_efficiency(const std::vector<ReplicateEstimates>& replicates,
                                              const GoldStandard& gold, const std::string& baseline) {
    if (replicates.empty()) throw InvalidInput("no replicate estimates given");
    // (integrand, method) -> estimates, in first-seen order.
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<double>> values;
    std::map<std::pair<std::string, std::string>, std::vector<double>> times;
    for (const auto& rep : replicates) {
        for (const auto& r : rep.records) {
            const auto key = std::make_pair(r.integrand, r.method);
            if (!values.count(key)) keys.push_back(key);
            values[key].push_back(r.estimate);
            const auto it = rep.method_seconds.find(r.method);
            if (it != rep.method_seconds.end() && rep.sampling_seconds)
                times[key].push_back(*rep.sampling_seconds + it->second);
        }
    }

    std::map<std::string, double> gold_values;
    std::set<std::string> integrands;
    for (const auto& k : keys) integrands.insert(k.first);
    for (const auto& name : integrands) {
        if (gold.per_integrand.count(name)) gold_values[name] = gold.per_integrand.at(name);
        else if (gold.common) gold_values[name] = *gold.common;
        else if (gold.method) {
            const auto it = values.find({name, *gold.method});
            if (it == values.end()) throw InvalidInput("gold-standard method '" + *gold.method + "' has no estimates for " + name);
            double mean = 0.0;
            for (double v : it->second) mean += v;
            gold_values[name] = mean / static_cast<double>(it->second.size());
        } else {
            throw InvalidInput("no gold standard for integrand " + name);
        }
    }

    auto mse_of = [&](const std::pair<std::string, std::string>& key) {
        const auto& v = values.at(key);
        double s = 0.0;
        for (double x : v) s += (x - gold_values.at(key.first)) * (x - gold_values.at(key.first));
        return s / static_cast<double>(v.size());
    };
    auto mean_time = [&](const std::pair<std::string, std::string>& key) -> std::optional<double> {
        const auto it = times.find(key);
        if (it == times.end() || it->second.size() != values.at(key).size()) return std::nullopt;
        double s = 0.0;
        for (double x : it->second) s += x;
        return s / static_cast<double>(it->second.size());
    };

    std::vector<EfficiencyRow> rows;
    for (const auto& key : keys) {
        const auto base_key = std::make_pair(key.first, baseline);
        if (!values.count(base_key)) throw InvalidInput("baseline method '" + baseline + "' missing for " + key.first);
        EfficiencyRow row;
        row.integrand = key.first;
        row.method = key.second;
        row.replicates = values.at(key).size();
        row.gold = gold_values.at(key.first);
        row.mse = mse_of(key);
        const double base_mse = mse_of(base_key);
        row.statistical = ratio(base_mse, row.mse, row.capped);
        row.mean_seconds = mean_time(key);
        const auto base_time = mean_time(base_key);
        if (row.mean_seconds && base_time) {
            bool c = false;
            row.overall = ratio(base_mse * *base_time, row.mse * *row.mean_seconds, c);
            row.capped = row.capped || c;
        }
        rows.push_back(row);
    }
    return rows;
}

std::string efficiency_csv(const std::vector<EfficiencyRow>& rows) {
    std::ostringstream out;
    out << "integrand,method,replicates,gold,mse,statistical_efficiency,overall_efficiency,capped\n";
    for (const auto& r : rows) {
        out << r.integrand << ',' << r.method << ',' << r.replicates << ',' << format_double(r.gold) << ','
            << format_double(r.mse) << ',' << format_double(r.statistical) << ','
            << (r.overall ? format_double(*r.overall) : std::string("NA")) << ',' << (r.capped ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string efficiency_markdown(const std::vector<EfficiencyRow>& rows) {
    auto fmt = [](double x, bool capped) {
        if (capped && x >= efficiency_cap) return std::string("> 1e12");
        std::ostringstream s;
        s.precision(3);
        s << x;
        return s.str();
    };
    std::ostringstream out;
    out << "| integrand | method | MSE | statistical efficiency | overall efficiency |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        std::ostringstream mse;
        mse.precision(3);
        mse << r.mse;
        out << "| " << r.integrand << " | " << r.method << " | " << mse.str() << " | " << fmt(r.statistical, r.capped)
            << " | " << (r.overall ? fmt(*r.overall, r.capped) : std::string("-")) << " |\n";
    }
    return out.str();
}

ReplicateEstimates read_replicate_estimates(const std::filesystem::path& estimates_json) {
    ReplicateEstimates rep;
    try {
        const auto j = nlohmann::json::parse(read_text_file(estimates_json));
        for (const auto& e : j.at("estimates"))
            rep.records.push_back({e.at("integrand").get<std::string>(), e.at("method").get<std::string>(),
                                   e.at("estimate").get<double>()});
        const auto timing = estimates_json.parent_path() / "timings.log";
        if (std::filesystem::exists(timing)) {
            const auto t = nlohmann::json::parse(read_text_file(timing));
            if (t.contains("sampling_seconds")) rep.sampling_seconds = t["sampling_seconds"].get<double>();
            else rep.sampling_seconds = 0.0;
            if (t.contains("method_seconds"))
                for (const auto& [k, v] : t["method_seconds"].items()) rep.method_seconds[k] = v.get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(estimates_json.string() + ": " + e.what());
    }
    return rep;
}

}  // namespace zvcv
