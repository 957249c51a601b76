#include "zvcv/commands.hpp"

#include "zvcv/archive.hpp"
#include "zvcv/errors.hpp"
#include "zvcv/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>

namespace zvcv {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string replicate_name(int r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "replicate_%03d", r);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Directories to process: the archive itself when it holds a manifest,
// otherwise its replicate_* subdirectories in name order.
std::vector<fs::path> run_directories(const fs::path& archive) {
    if (fs::exists(archive / "manifest.json")) return {archive};
    std::vector<fs::path> out;
    if (fs::is_directory(archive))
        for (const auto& entry : fs::directory_iterator(archive))
            if (entry.is_directory() && entry.path().filename().string().rfind("replicate_", 0) == 0 &&
                fs::exists(entry.path() / "manifest.json"))
                out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw IoError("no SMC run found at " + archive.string());
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

ojson config_header(const std::string& command) {
    ojson j;
    j["command"] = command;
    return j;
}

void write_json(const fs::path& path, const ojson& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace

// -------------------------------------------------------------------- smc

void cmd_smc(const SmcCommandOptions& opts) {
    opts.smc.validate();
    if (opts.replicates < 0) throw ConfigError("replicates must be nonnegative");
    const ModelPtr model = load_model(opts.model);

    ojson cfg = config_header("smc");
    cfg["model"] = opts.model;
    cfg["n"] = opts.smc.n;
    cfg["rho"] = opts.smc.rho;
    cfg["h_min"] = opts.smc.h_min;
    cfg["h_max"] = opts.smc.h_max;
    cfg["h_grid"] = opts.smc.h_grid;
    cfg["jump_fraction"] = opts.smc.jump_fraction;
    cfg["jump_threshold_stat"] = opts.smc.jump_threshold_stat == JumpStat::mean ? "mean" : "median";
    cfg["max_repeats"] = opts.smc.max_repeats;
    cfg["replicates"] = opts.replicates;
    cfg["seed"] = opts.smc.seed;
    if (opts.schedule) cfg["schedule"] = opts.schedule->string();
    write_json(opts.out / "run_config.json", cfg);

    FrozenSchedule schedule;
    if (opts.schedule) {
        const fs::path manifest = fs::is_directory(*opts.schedule) ? *opts.schedule / "manifest.json" : *opts.schedule;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(manifest));
            schedule.temperatures = j.at("temperatures").get<std::vector<double>>();
            schedule.h = j.at("h").get<std::vector<double>>();
            schedule.repeats = j.at("repeats").get<std::vector<int>>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(manifest.string() + ": " + e.what());
        }
    } else {
        const auto start = std::chrono::steady_clock::now();
        const SmcRun pilot = run_smc(*model, opts.smc);
        write_run(opts.out / "pilot", pilot, opts.model);
        write_json(opts.out / "pilot" / "sampling_time.log", ojson{{"seconds", seconds_since(start)}});
        schedule = pilot.schedule;
    }

    for (int r = 1; r <= opts.replicates; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const std::uint64_t seed = Rng::stream(opts.smc.seed, 0x5EED, static_cast<std::uint64_t>(r)).next();
        const SmcRun run = replay_smc(*model, schedule, opts.smc.n, seed);
        const fs::path dir = opts.out / replicate_name(r);
        write_run(dir, run, opts.model);
        write_json(dir / "sampling_time.log", ojson{{"seconds", seconds_since(start)}});
    }
}

// ------------------------------------------------------------ postprocess

std::vector<IntegrandValues> make_integrands(const std::string& spec, const Matrix& theta) {
    std::vector<IntegrandValues> out;
    const Index d = theta.cols();
    auto coord = [&](const std::string& text) {
        Index k = 0;
        try {
            k = static_cast<Index>(std::stol(text));
        } catch (const std::exception&) {
            throw ConfigError("invalid coordinate in integrand: " + text);
        }
        if (k < 1 || k > d) throw ConfigError("integrand coordinate out of range: " + text);
        return k - 1;
    };
    for (const auto& item : split_list(spec)) {
        if (item == "mean") {
            for (Index k = 0; k < d; ++k) out.push_back({theta.col(k), "theta_" + std::to_string(k + 1)});
        } else if (item == "square") {
            for (Index k = 0; k < d; ++k)
                out.push_back({theta.col(k).cwiseAbs2(), "theta_" + std::to_string(k + 1) + "^2"});
        } else if (item.rfind("coord:", 0) == 0) {
            const Index k = coord(item.substr(6));
            out.push_back({theta.col(k), "theta_" + std::to_string(k + 1)});
        } else if (item.rfind("square:", 0) == 0) {
            const Index k = coord(item.substr(7));
            out.push_back({theta.col(k).cwiseAbs2(), "theta_" + std::to_string(k + 1) + "^2"});
        } else {
            throw ConfigError("unknown integrand '" + item + "' (expected mean, square, coord:K or square:K)");
        }
    }
    return out;
}

namespace {

struct PostprocessInput {
    SampleSet samples;
    std::string model;
    std::optional<double> sampling_seconds;
};

PostprocessInput load_posterior_samples(const fs::path& path) {
    PostprocessInput in;
    if (fs::is_directory(path)) {
        const LoadedRun run = read_run(path);
        if (run.snapshots.empty() || run.snapshots.back().t != 1.0)
            throw InvalidSchedule(path.string() + " has no population at inverse temperature 1");
        in.samples = run.snapshots.back().samples();
        in.model = run.model;
        if (fs::exists(path / "sampling_time.log"))
            in.sampling_seconds =
                nlohmann::json::parse(read_text_file(path / "sampling_time.log")).at("seconds").get<double>();
    } else {
        in.samples = read_sample_csv(path).samples;
    }
    return in;
}

void postprocess_one(const PostprocessOptions& opts, const fs::path& archive, const fs::path& out,
                     const std::vector<MethodSpec>& methods) {
    const PostprocessInput in = load_posterior_samples(archive);
    Matrix theta = in.samples.theta();
    if (opts.scale == "natural") {
        const std::string model_name = opts.model.value_or(in.model);
        if (!model_name.empty()) {
            const ParameterTransform map = load_model(model_name)->transform();
            for (Index i = 0; i < theta.rows(); ++i) theta.row(i) = map.inverse(theta.row(i).transpose()).transpose();
        }
    } else if (opts.scale != "sampling") {
        throw ConfigError("scale must be 'natural' or 'sampling'");
    }
    const auto integrands = make_integrands(opts.integrands, theta);

    ojson result;
    result["n"] = in.samples.count();
    result["dim"] = in.samples.dim();
    result["scale"] = opts.scale;
    auto& list = result["estimates"] = ojson::array();
    std::map<std::string, double> seconds;
    for (const auto& m : methods) {
        const auto start = std::chrono::steady_clock::now();
        for (const auto& phi : integrands) {
            const MethodEstimate e = estimate_expectation(in.samples, phi, m, opts.seed);
            ojson x;
            x["integrand"] = phi.label;
            x["method"] = m.label();
            x["selected"] = e.label;
            x["estimate"] = e.estimate;
            if (e.q) x["Q"] = *e.q;
            if (e.penalty) x["penalty"] = *e.penalty;
            if (e.lambda) x["lambda"] = *e.lambda;
            if (e.bandwidth) x["bandwidth"] = *e.bandwidth;
            list.push_back(std::move(x));
        }
        seconds[m.label()] += seconds_since(start);
    }
    write_json(out / "estimates.json", result);
    ojson timing;
    timing["sampling_seconds"] = in.sampling_seconds.value_or(0.0);
    timing["method_seconds"] = seconds;
    write_json(out / "timings.log", timing);
}

}  // namespace

void cmd_postprocess(const PostprocessOptions& opts) {
    const auto methods = parse_method_list(opts.methods);

    ojson cfg = config_header("postprocess");
    cfg["archive"] = opts.archive.string();
    cfg["methods"] = opts.methods;
    cfg["integrands"] = opts.integrands;
    cfg["scale"] = opts.scale;
    if (opts.model) cfg["model"] = *opts.model;
    cfg["seed"] = opts.seed;
    write_json(opts.out / "run_config.json", cfg);

    if (!fs::exists(opts.archive)) throw IoError("archive not found: " + opts.archive.string());
    if (!fs::is_directory(opts.archive) || fs::exists(opts.archive / "manifest.json")) {
        postprocess_one(opts, opts.archive, opts.out, methods);
        return;
    }
    for (const auto& dir : run_directories(opts.archive))
        postprocess_one(opts, dir, opts.out / dir.filename(), methods);
}

// --------------------------------------------------------------- evidence

namespace {

void evidence_one(const EvidenceOptions& opts, const fs::path& archive, const fs::path& out,
                  const std::vector<MethodSpec>& methods, const std::vector<EvidenceEstimator>& estimators) {
    const LoadedRun run = read_run(archive);
    const TemperatureSchedule schedule =
        opts.posthoc_rho ? posthoc_schedule(run.snapshots, *opts.posthoc_rho) : native_schedule(run.snapshots);
    schedule.validate();

    std::vector<EvidenceReport> reports;
    std::map<std::string, double> seconds;
    for (const auto est : estimators)
        for (const auto& m : methods) {
            const auto start = std::chrono::steady_clock::now();
            reports.push_back(estimate_evidence(run.snapshots, schedule, est, m, opts.seed, opts.v_mean));
            seconds[m.label()] += seconds_since(start);
        }
    write_text_file(out / "evidence.json", to_json(reports));
    ojson timing;
    double sampling = 0.0;
    if (fs::exists(archive / "sampling_time.log"))
        sampling = nlohmann::json::parse(read_text_file(archive / "sampling_time.log")).at("seconds").get<double>();
    timing["sampling_seconds"] = sampling;
    timing["method_seconds"] = seconds;
    write_json(out / "timings.log", timing);
}

}  // namespace

void cmd_evidence(const EvidenceOptions& opts) {
    const auto methods = parse_method_list(opts.methods);
    std::vector<EvidenceEstimator> estimators;
    for (const auto& e : opts.estimators) estimators.push_back(parse_evidence_estimator(e));
    if (estimators.empty()) throw ConfigError("no evidence estimator given");
    if (opts.posthoc_rho && !(*opts.posthoc_rho > 0.0 && *opts.posthoc_rho < 1.0))
        throw ConfigError("posthoc rho must lie in (0, 1)");

    ojson cfg = config_header("evidence");
    cfg["archive"] = opts.archive.string();
    cfg["estimators"] = opts.estimators;
    cfg["methods"] = opts.methods;
    if (opts.posthoc_rho) cfg["posthoc_rho"] = *opts.posthoc_rho;
    cfg["v_mean"] = opts.v_mean == VMeanMode::cv ? "cv" : "raw";
    cfg["seed"] = opts.seed;
    write_json(opts.out / "run_config.json", cfg);

    if (!fs::exists(opts.archive)) throw IoError("archive not found: " + opts.archive.string());
    if (fs::exists(opts.archive / "manifest.json")) {
        evidence_one(opts, opts.archive, opts.out, methods, estimators);
        return;
    }
    for (const auto& dir : run_directories(opts.archive))
        evidence_one(opts, dir, opts.out / dir.filename(), methods, estimators);
}

// ------------------------------------------------------------- efficiency

namespace {

ReplicateEstimates read_any_estimates(const fs::path& file) {
    if (file.filename() != "evidence.json") return read_replicate_estimates(file);
    ReplicateEstimates rep;
    try {
        const auto j = nlohmann::json::parse(read_text_file(file));
        for (const auto& r : j)
            rep.records.push_back({"log_evidence:" + r.at("estimator").get<std::string>(),
                                   r.at("method").get<std::string>(), r.at("log_evidence").get<double>()});
        const auto timing = file.parent_path() / "timings.log";
        if (fs::exists(timing)) {
            const auto t = nlohmann::json::parse(read_text_file(timing));
            rep.sampling_seconds = t.value("sampling_seconds", 0.0);
            for (const auto& [k, v] : t.at("method_seconds").items()) rep.method_seconds[k] = v.get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(file.string() + ": " + e.what());
    }
    return rep;
}

}  // namespace

void cmd_efficiency(const EfficiencyOptions& opts) {
    if (opts.inputs.empty()) throw ConfigError("no estimate files given");
    std::vector<fs::path> files;
    for (const auto& in : opts.inputs) {
        if (!fs::exists(in)) throw IoError("not found: " + in.string());
        if (!fs::is_directory(in)) {
            files.push_back(in);
            continue;
        }
        std::vector<fs::path> found;
        for (const auto& entry : fs::directory_iterator(in)) {
            if (!entry.is_directory()) continue;
            for (const char* name : {"estimates.json", "evidence.json"})
                if (fs::exists(entry.path() / name)) found.push_back(entry.path() / name);
        }
        std::sort(found.begin(), found.end());
        if (found.empty()) throw IoError("no replicate estimates under " + in.string());
        files.insert(files.end(), found.begin(), found.end());
    }

    ojson cfg = config_header("efficiency");
    std::vector<std::string> names;
    for (const auto& f : opts.inputs) names.push_back(f.string());
    cfg["inputs"] = names;
    if (opts.gold.common) cfg["gold"] = *opts.gold.common;
    if (opts.gold.method) cfg["gold_method"] = *opts.gold.method;
    if (!opts.gold.per_integrand.empty()) cfg["gold_values"] = opts.gold.per_integrand;
    cfg["baseline"] = opts.baseline;
    write_json(opts.out / "run_config.json", cfg);

    std::vector<ReplicateEstimates> reps;
    for (const auto& f : files) reps.push_back(read_any_estimates(f));
    const auto rows = compute_efficiency(reps, opts.gold, opts.baseline);
    write_text_file(opts.out / "efficiency.csv", efficiency_csv(rows));
    write_text_file(opts.out / "efficiency.md", efficiency_markdown(rows));
}

// -------------------------------------------------------------------- CLI

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Control-variate post-processing and likelihood-annealing SMC"};
    app.require_subcommand(1);

    SmcCommandOptions smc;
    std::string jump_stat = "mean";
    std::string schedule_path;
    auto* smc_cmd = app.add_subcommand("smc", "adaptive SMC pilot run plus replayed replicates");
    smc_cmd->add_option("--model", smc.model, "built-in model name or JSON manifest")->capture_default_str();
    smc_cmd->add_option("--n", smc.smc.n, "number of particles")->capture_default_str();
    smc_cmd->add_option("--rho", smc.smc.rho, "ESS fraction kept per temperature step")->capture_default_str();
    smc_cmd->add_option("--hmin", smc.smc.h_min, "smallest MALA step size")->capture_default_str();
    smc_cmd->add_option("--hmax", smc.smc.h_max, "largest MALA step size")->capture_default_str();
    smc_cmd->add_option("--h-grid", smc.smc.h_grid, "number of trial step sizes")->capture_default_str();
    smc_cmd->add_option("--jump-fraction", smc.smc.jump_fraction, "fraction of particles that must travel far")
        ->capture_default_str();
    smc_cmd->add_option("--jump-stat", jump_stat, "inter-particle distance statistic (mean|median)")
        ->check(CLI::IsMember({"mean", "median"}))
        ->capture_default_str();
    smc_cmd->add_option("--max-repeats", smc.smc.max_repeats, "cap on MCMC sweeps per step")->capture_default_str();
    smc_cmd->add_option("--replicates", smc.replicates, "replays of the pilot schedule")->capture_default_str();
    smc_cmd->add_option("--seed", smc.smc.seed, "master seed")->capture_default_str();
    smc_cmd->add_option("--schedule", schedule_path, "replay this manifest instead of running a pilot");
    smc_cmd->add_option("--out", smc.out, "output directory")->capture_default_str();

    PostprocessOptions post;
    std::string post_model;
    auto* post_cmd = app.add_subcommand("postprocess", "control-variate estimates of posterior expectations");
    post_cmd->add_option("--archive", post.archive, "run directory, directory of replicates, or sample CSV")
        ->required();
    post_cmd->add_option("--methods", post.methods, "comma-separated methods")->capture_default_str();
    post_cmd->add_option("--integrands", post.integrands, "mean, square, coord:K, square:K")->capture_default_str();
    post_cmd->add_option("--scale", post.scale, "natural or sampling")
        ->check(CLI::IsMember({"natural", "sampling"}))
        ->capture_default_str();
    post_cmd->add_option("--model", post_model, "model defining the natural scale");
    post_cmd->add_option("--seed", post.seed, "seed for cross-validation splits")->capture_default_str();
    post_cmd->add_option("--out", post.out, "output directory")->capture_default_str();

    EvidenceOptions ev;
    std::string v_mean = "cv";
    double posthoc = 0.0;
    auto* ev_cmd = app.add_subcommand("evidence", "log-evidence estimates with control variates");
    ev_cmd->add_option("--archive", ev.archive, "run directory or directory of replicates")->required();
    ev_cmd->add_option("--estimator", ev.estimators, "cti2, cti1 and/or smc")->delimiter(',')->capture_default_str();
    ev_cmd->add_option("--methods", ev.methods, "comma-separated methods")->capture_default_str();
    auto* posthoc_opt = ev_cmd->add_option("--posthoc-rho,--rho-tilde", posthoc, "re-choose temperatures with this CESS fraction");
    ev_cmd->add_option("--v-mean", v_mean, "mean used inside the variance integrand (cv|raw)")
        ->check(CLI::IsMember({"cv", "raw"}))
        ->capture_default_str();
    ev_cmd->add_option("--seed", ev.seed, "seed for cross-validation splits")->capture_default_str();
    ev_cmd->add_option("--out", ev.out, "output directory")->capture_default_str();

    EfficiencyOptions eff;
    double gold_value = 0.0;
    std::string gold_method, gold_file;
    auto* eff_cmd = app.add_subcommand("efficiency", "statistical and overall efficiency tables");
    eff_cmd->add_option("--estimates", eff.inputs, "estimate files or replicate directories")->required();
    auto* gold_opt = eff_cmd->add_option("--gold", gold_value, "reference value for every integrand");
    eff_cmd->add_option("--gold-method", gold_method, "use this method's mean estimate as the reference");
    eff_cmd->add_option("--gold-file", gold_file, "JSON object of integrand -> reference value");
    eff_cmd->add_option("--baseline", eff.baseline, "method in the numerator")->capture_default_str();
    eff_cmd->add_option("--out", eff.out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*smc_cmd) {
            smc.smc.jump_threshold_stat = jump_stat == "median" ? JumpStat::median : JumpStat::mean;
            if (!schedule_path.empty()) smc.schedule = schedule_path;
            cmd_smc(smc);
        } else if (*post_cmd) {
            if (!post_model.empty()) post.model = post_model;
            cmd_postprocess(post);
        } else if (*ev_cmd) {
            if (*posthoc_opt) ev.posthoc_rho = posthoc;
            ev.v_mean = v_mean == "raw" ? VMeanMode::raw : VMeanMode::cv;
            cmd_evidence(ev);
        } else if (*eff_cmd) {
            if (*gold_opt) eff.gold.common = gold_value;
            if (!gold_method.empty()) eff.gold.method = gold_method;
            if (!gold_file.empty()) {
                try {
                    const auto j = nlohmann::json::parse(read_text_file(gold_file));
                    for (const auto& [k, v] : j.items()) eff.gold.per_integrand[k] = v.get<double>();
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError(gold_file + ": " + e.what());
                }
            }
            cmd_efficiency(eff);
        }
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 4;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace zvcv
