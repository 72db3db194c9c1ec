#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bip/basis.hpp"
#include "bip/error.hpp"
#include "bip/eval.hpp"
#include "bip/filter.hpp"
#include "bip/interaction.hpp"
#include "bip/log.hpp"
#include "bip/model.hpp"
#include "bip/numio.hpp"
#include "bip/response.hpp"
#include "bip/rng.hpp"
#include "bip/simgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) { return bip::format_double(v); }

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct RunConfig {
    std::uint64_t seed = 1;
    int basis = 15;
    double sample_hz = 30.0, infer_hz = 3.0, exec_hz = 10.0;
    // filter noise
    double q_phase = 1e-8, q_phase_vel = 5e-7, q_weights = 0.0;
    double r_rel = 0.03; // measurement sd as a fraction of each DoF's demo range
    double mahalanobis_gate = 0.0;
    // simulate
    int scenarios = 12, repetitions = 3, tests_per_kind = 2;
    int observed = 3, controlled = 5;
    double duration_s = 10.0;
    double speed_lo = 0.8, speed_hi = 1.25;
    double noise_rel = 0.005;
    double endpoint_spread_rel = 0.0866;
    std::vector<double> endpoints = {0.6, 0.5, 0.8}; // cycled over observed DoFs
    // eval
    double ttc_window_s = 2.0;
    double ttc_threshold_observed = 1e-3, ttc_threshold_controlled = 1e-3;
    double corr_window_s = 2.0, corr_stride_s = 0.5;

    void validate() const {
        if (!(sample_hz > 0) || !(infer_hz > 0) || !(exec_hz > 0))
            throw bip::ConfigError("rates must be positive");
        if (infer_hz > sample_hz)
            throw bip::ConfigError("inference rate must not exceed the sample rate");
        if (basis < 2) throw bip::ConfigError("basis count must be at least 2");
        if (scenarios < 1 || repetitions < 1 || tests_per_kind < 0)
            throw bip::ConfigError("simulate counts must be positive");
        if (observed < 1 || controlled < 1)
            throw bip::ConfigError("need at least one observed and one controlled DoF");
        if (!(duration_s > 0)) throw bip::ConfigError("duration must be positive");
        if (!(speed_lo > 0) || !(speed_hi >= speed_lo)) throw bip::ConfigError("bad speed range");
        if (!(noise_rel >= 0) || !(endpoint_spread_rel >= 0) || endpoint_spread_rel >= 1)
            throw bip::ConfigError("noise_rel must be >= 0 and endpoint_spread_rel in [0,1)");
        if (endpoints.empty()) throw bip::ConfigError("endpoints must not be empty");
        if (!(ttc_window_s > 0) || !(corr_window_s > 0) || !(corr_stride_s > 0))
            throw bip::ConfigError("analysis windows must be positive");
        if (!(ttc_threshold_observed > 0) || !(ttc_threshold_controlled > 0))
            throw bip::ConfigError("settling thresholds must be positive");
        if (!(r_rel > 0)) throw bip::ConfigError("r_rel must be positive");
        if (q_phase < 0 || q_phase_vel < 0 || q_weights < 0 || mahalanobis_gate < 0)
            throw bip::ConfigError("noise parameters must be nonnegative");
    }
};

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw bip::ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

RunConfig load_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw bip::ConfigError("cannot open config file " + path.string());
    RunConfig cfg;
    try {
        json j = json::parse(f);
        if (!j.is_object()) throw bip::ConfigError("config must be a JSON object");
        check_keys(j, {"seed", "basis", "rates", "noise", "simulate", "eval"}, "the top level");
        get_if(j, "seed", cfg.seed);
        get_if(j, "basis", cfg.basis);
        if (j.contains("rates")) {
            const json& r = j.at("rates");
            check_keys(r, {"sample", "infer", "exec"}, "rates");
            get_if(r, "sample", cfg.sample_hz);
            get_if(r, "infer", cfg.infer_hz);
            get_if(r, "exec", cfg.exec_hz);
        }
        if (j.contains("noise")) {
            const json& n = j.at("noise");
            check_keys(n, {"q_phase", "q_phase_vel", "q_weights", "r_rel", "mahalanobis_gate"},
                       "noise");
            get_if(n, "q_phase", cfg.q_phase);
            get_if(n, "q_phase_vel", cfg.q_phase_vel);
            get_if(n, "q_weights", cfg.q_weights);
            get_if(n, "r_rel", cfg.r_rel);
            get_if(n, "mahalanobis_gate", cfg.mahalanobis_gate);
        }
        if (j.contains("simulate")) {
            const json& s = j.at("simulate");
            check_keys(s,
                       {"scenarios", "repetitions", "tests_per_kind", "observed", "controlled",
                        "duration_s", "speed_lo", "speed_hi", "noise_rel", "endpoints",
                        "endpoint_spread_rel"},
                       "simulate");
            get_if(s, "scenarios", cfg.scenarios);
            get_if(s, "repetitions", cfg.repetitions);
            get_if(s, "tests_per_kind", cfg.tests_per_kind);
            get_if(s, "observed", cfg.observed);
            get_if(s, "controlled", cfg.controlled);
            get_if(s, "duration_s", cfg.duration_s);
            get_if(s, "speed_lo", cfg.speed_lo);
            get_if(s, "speed_hi", cfg.speed_hi);
            get_if(s, "noise_rel", cfg.noise_rel);
            get_if(s, "endpoints", cfg.endpoints);
            get_if(s, "endpoint_spread_rel", cfg.endpoint_spread_rel);
        }
        if (j.contains("eval")) {
            const json& e = j.at("eval");
            check_keys(e,
                       {"ttc_window_s", "ttc_threshold_observed", "ttc_threshold_controlled",
                        "corr_window_s", "corr_stride_s"},
                       "eval");
            get_if(e, "ttc_window_s", cfg.ttc_window_s);
            get_if(e, "ttc_threshold_observed", cfg.ttc_threshold_observed);
            get_if(e, "ttc_threshold_controlled", cfg.ttc_threshold_controlled);
            get_if(e, "corr_window_s", cfg.corr_window_s);
            get_if(e, "corr_stride_s", cfg.corr_stride_s);
        }
    } catch (const json::exception& e) {
        throw bip::ConfigError("config " + path.string() + ": " + e.what());
    }
    return cfg;
}

void apply_rates(RunConfig& cfg, const std::string& spec) {
    std::vector<double> vals;
    size_t start = 0;
    while (start <= spec.size()) {
        const size_t comma = spec.find(',', start);
        const std::string_view part(spec.data() + start,
                                    (comma == std::string::npos ? spec.size() : comma) - start);
        double v = 0;
        if (!bip::parse_double(part, v))
            throw bip::ConfigError("--rates expects sample,infer,exec (got '" + spec + "')");
        vals.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (vals.size() != 3)
        throw bip::ConfigError("--rates expects exactly three values: sample,infer,exec");
    cfg.sample_hz = vals[0];
    cfg.infer_hz = vals[1];
    cfg.exec_hz = vals[2];
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw bip::DataError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------- train ----

int cmd_train(const RunConfig& cfg, const std::string& demos_dir, const fs::path& out) {
    const auto files = sorted_files(demos_dir);
    if (files.empty()) throw bip::DataError("no demonstration files in " + demos_dir);

    std::vector<bip::Interaction> demos;
    std::vector<fs::path> loaded;
    std::vector<std::string> failures;
    for (const auto& f : files) {
        try {
            demos.push_back(bip::load_interaction(f));
            loaded.push_back(f);
        } catch (const bip::DataError& e) {
            failures.push_back(e.what());
        }
    }
    for (size_t i = 1; i < demos.size(); ++i) {
        if (!(demos[i].layout == demos[0].layout) || demos[i].sample_rate != demos[0].sample_rate)
            failures.push_back(loaded[i].string() + ": layout or sample rate differs from " +
                               loaded[0].string());
    }
    if (!failures.empty()) {
        for (const auto& m : failures) std::cerr << "demo rejected: " << m << "\n";
        throw bip::DataError(std::to_string(failures.size()) +
                             " demonstration file(s) were rejected");
    }
    if (demos.size() < 2) throw bip::DataError("need at least two demonstrations to learn a model");

    std::vector<bip::BasisConfig> cfgs((size_t)demos[0].layout.total(),
                                       bip::BasisConfig::regular(cfg.basis));
    bip::PriorModel model = bip::learn_prior(demos, cfgs);
    const fs::path model_path = out / "model.json";
    bip::save_model(model, model_path);

    std::printf("demonstrations: %d\n", model.demo_count);
    std::printf("layout: %d observed + %d controlled DoFs\n", model.layout.observed_count,
                model.layout.controlled_count);
    std::printf("basis: %d per DoF, %ld latent weights, %ld filter state dimensions\n", cfg.basis,
                model.weight_dim(), model.state_dim());
    std::printf("phase velocity prior: %s per sample (sd %s)\n", fmt6(model.phase_vel0).c_str(),
                fmt6(std::sqrt(model.var_phase_vel0)).c_str());

    Eigen::SelfAdjointEigenSolver<bip::Mat> ew(
        model.Sigma0.bottomRightCorner(model.weight_dim(), model.weight_dim()));
    std::printf("weight covariance eigenvalues: [%s, %s]\n", fmt6(ew.eigenvalues()(0)).c_str(),
                fmt6(ew.eigenvalues()(model.weight_dim() - 1)).c_str());

    const auto& c0 = model.basis[0];
    const long tn = std::max<long>(2, std::llround(model.mean_demo_length));
    bip::Mat phi(tn, c0.count);
    for (long t = 0; t < tn; ++t) phi.row(t) = bip::basis_row(bip::phase_of(t, tn), c0);
    Eigen::SelfAdjointEigenSolver<bip::Mat> eg(phi.transpose() * phi);
    std::printf("design gram condition at T=%ld: %s\n", tn,
                fmt6(eg.eigenvalues()(c0.count - 1) / std::max(eg.eigenvalues()(0), 1e-300))
                    .c_str());
    std::printf("model: %s\n", model_path.string().c_str());
    return 0;
}

// ---------------------------------------------------------------- infer ----

int cmd_infer(const RunConfig& cfg, const std::string& model_path, const std::string& input_path,
              const std::string& controller, const fs::path& out) {
    bip::PriorModel model = bip::load_model(model_path);
    bip::Interaction input = bip::load_interaction(input_path);
    if (!(input.layout == model.layout))
        throw bip::DataError("input layout does not match the model layout: " + input_path);
    if (std::abs(input.sample_rate - cfg.sample_hz) > 1e-9)
        throw bip::DataError("input sample rate " + fmt(input.sample_rate) +
                             " differs from the configured sample rate " + fmt(cfg.sample_hz));

    bip::NoiseConfig noise = bip::NoiseConfig::defaults_for(model, cfg.r_rel);
    noise.q_phase = cfg.q_phase;
    noise.q_phase_vel = cfg.q_phase_vel;
    noise.q_weights = cfg.q_weights;
    noise.mahalanobis_gate = cfg.mahalanobis_gate;

    bip::ReplayStream stream(input);
    const bip::ControllerKind kind =
        controller == "static" ? bip::ControllerKind::static_replay : bip::ControllerKind::bip;
    bip::LoopResult res = bip::interaction_loop(
        model, stream, {cfg.sample_hz, cfg.infer_hz, cfg.exec_hz}, noise, kind);

    const std::string stem = fs::path(input_path).stem().string();
    const fs::path phase_path = out / ("phase_" + controller + "_" + stem + ".csv");
    {
        std::ofstream f(phase_path);
        if (!f) throw bip::DataError("cannot write " + phase_path.string());
        f << "tick,phase,phase_vel,var_phase,var_phase_vel\n";
        for (size_t t = 0; t < res.phase_trace.size(); ++t) {
            const auto& r = res.phase_trace[t];
            f << t << ',' << fmt(r[0]) << ',' << fmt(r[1]) << ',' << fmt(r[2]) << ','
              << fmt(r[3]) << "\n";
        }
    }
    const fs::path exec_path = out / (controller + "_" + stem + ".txt");
    bip::save_interaction(res.executed, exec_path);

    const auto& last = res.phase_trace.back();
    std::printf("ticks: %zu\n", res.phase_trace.size());
    std::printf("terminal phase: %s (velocity %s per sample)\n", fmt6(last[0]).c_str(),
                fmt6(last[1]).c_str());
    std::printf("wrote %s\n", phase_path.string().c_str());
    std::printf("wrote %s\n", exec_path.string().c_str());
    return 0;
}

// ------------------------------------------------------------- simulate ----

bip::Interaction make_still(const bip::DofLayout& layout, double sample_rate, double duration_s,
                            const bip::Vec& end_obs, double noise_rel, std::uint64_t seed) {
    bip::Interaction ix;
    ix.layout = layout;
    ix.sample_rate = sample_rate;
    const long T = std::max<long>(2, std::llround(duration_s * sample_rate));
    ix.data = bip::Mat::Zero(layout.total(), T);
    auto rng = bip::make_rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int d = 0; d < layout.observed_count; ++d) {
        const double sd = noise_rel * std::abs(end_obs[d]);
        for (long t = 0; t < T; ++t) ix.data(d, t) = sd * g(rng);
    }
    return ix;
}

int cmd_simulate(const RunConfig& cfg, const fs::path& out) {
    bip::DofLayout layout = bip::default_layout(cfg.observed, cfg.controlled);
    bip::Vec end_obs(cfg.observed);
    for (int d = 0; d < cfg.observed; ++d)
        end_obs[d] = cfg.endpoints[(size_t)d % cfg.endpoints.size()];

    const fs::path demo_dir = out / "demos";
    const fs::path test_dir = out / "tests";
    fs::create_directories(demo_dir);
    fs::create_directories(test_dir);

    // demo corpus: `scenarios` distinct trajectories, each recorded
    // `repetitions` times with fresh sensor noise
    char name[64];
    int n_demos = 0;
    for (int i = 0; i < cfg.scenarios; ++i) {
        bip::ScenarioParams p;
        p.layout = layout;
        p.sample_rate = cfg.sample_hz;
        p.duration_s = cfg.duration_s;
        p.noise_rel = cfg.noise_rel;
        p.endpoint = bip::Vec::Zero(layout.total());
        if (i == 0) { // fixed reference shape
            for (int d = 0; d < cfg.observed; ++d) p.endpoint[d] = end_obs[d];
            p.speed_factor = 1.0;
            p.onset_delay_s = 0.15;
            p.hold_s = 0.35;
        } else {
            auto rng = bip::make_rng(bip::split_seed(cfg.seed, 100 + (std::uint64_t)i));
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            for (int d = 0; d < cfg.observed; ++d) {
                const double lo = end_obs[d] * (1.0 - cfg.endpoint_spread_rel);
                const double hi = end_obs[d] * (1.0 + cfg.endpoint_spread_rel);
                p.endpoint[d] = lo + (hi - lo) * u01(rng);
            }
            p.speed_factor = cfg.speed_lo + (cfg.speed_hi - cfg.speed_lo) * u01(rng);
            p.onset_delay_s = 0.3 * u01(rng);
            p.hold_s = 0.2 + 0.3 * u01(rng);
        }
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            p.seed = bip::split_seed(cfg.seed, 1000 + (std::uint64_t)(i * cfg.repetitions + rep));
            std::snprintf(name, sizeof name, "demo_%02d_r%d.txt", i, rep);
            bip::save_interaction(bip::gen_handshake(p).ix, demo_dir / name);
            ++n_demos;
        }
    }
    std::printf("wrote %d demonstrations to %s\n", n_demos, demo_dir.string().c_str());

    struct Kind {
        const char* tag;
        double speed;
        double pause_s;
        bool still;
    };
    const Kind kinds[] = {
        {"normal", 1.0, 0.0, false}, {"fast", 2.0, 0.0, false}, {"slow", 0.5, 0.0, false},
        {"pause", 1.0, 3.0, false},  {"none", 1.0, 0.0, true},
    };
    int n_tests = 0;
    for (size_t k = 0; k < std::size(kinds); ++k) {
        for (int j = 0; j < cfg.tests_per_kind; ++j) {
            const std::uint64_t s =
                bip::split_seed(cfg.seed, 5000 + 100 * (std::uint64_t)k + (std::uint64_t)j);
            std::snprintf(name, sizeof name, "test_%s_%02d.txt", kinds[k].tag, j);
            bip::Interaction ix;
            if (kinds[k].still) {
                ix = make_still(layout, cfg.sample_hz, cfg.duration_s, end_obs, cfg.noise_rel, s);
            } else {
                bip::ScenarioParams p;
                p.layout = layout;
                p.sample_rate = cfg.sample_hz;
                p.duration_s = cfg.duration_s;
                p.noise_rel = cfg.noise_rel;
                p.endpoint = bip::Vec::Zero(layout.total());
                for (int d = 0; d < cfg.observed; ++d) p.endpoint[d] = end_obs[d];
                p.speed_factor = kinds[k].speed;
                p.pause_ticks = std::llround(kinds[k].pause_s * cfg.sample_hz);
                p.hold_s = 0.15;
                p.seed = s;
                ix = bip::gen_handshake(p).ix;
            }
            bip::save_interaction(ix, test_dir / name);
            ++n_tests;
        }
    }
    std::printf("wrote %d test scenarios to %s\n", n_tests, test_dir.string().c_str());
    return 0;
}

// ----------------------------------------------------------------- eval ----

struct ArmStats {
    std::vector<double> ratios;
    long never_settled = 0;
    bip::Mat corr_sum;
    long n_runs = 0;
    std::array<long, 20> hist{};
    long hist_valid = 0, hist_skipped = 0;
    double cross_abs_sum = 0.0;
    long cross_pairs = 0;
    std::vector<std::pair<std::string, std::array<double, 2>>> terminals; // file -> phase, vel
};

bool read_terminal_phase(const fs::path& csv, std::array<double, 2>& out) {
    std::ifstream f(csv);
    if (!f) return false;
    std::string line, last;
    std::getline(f, line); // header
    while (std::getline(f, line))
        if (!line.empty() && line != "\r") last = line;
    if (last.empty()) return false;
    std::vector<std::string_view> cols;
    std::string_view sv(last);
    size_t start = 0;
    while (start <= sv.size()) {
        const size_t comma = sv.find(',', start);
        cols.push_back(sv.substr(start, (comma == std::string::npos ? sv.size() : comma) - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (cols.size() < 3) return false;
    return bip::parse_double(cols[1], out[0]) && bip::parse_double(cols[2], out[1]);
}

int cmd_eval(const RunConfig& cfg, const std::string& model_path, const std::string& runs_dir,
             const fs::path& out) {
    bip::PriorModel model = bip::load_model(model_path);
    const auto files = sorted_files(runs_dir);
    const int D = model.layout.total();
    const int d_o = model.layout.observed_count;

    std::map<std::string, ArmStats> arms;
    std::vector<std::string> ttc_rows;

    for (const auto& f : files) {
        const std::string base = f.filename().string();
        std::string arm;
        if (base.rfind("bip_", 0) == 0)
            arm = "bip";
        else if (base.rfind("static_", 0) == 0)
            arm = "static";
        else
            continue;
        if (f.extension() != ".txt") continue;

        bip::Interaction ix = bip::load_interaction(f);
        if (!(ix.layout == model.layout))
            throw bip::DataError("run layout does not match the model: " + f.string());
        if (!ix.executed) throw bip::DataError("not an executed recording: " + f.string());

        ArmStats& a = arms[arm];
        if (a.corr_sum.size() == 0) a.corr_sum = bip::Mat::Zero(D, D);

        const bip::TtcResult ttc = bip::time_to_completion(
            ix, cfg.ttc_window_s, cfg.ttc_threshold_observed, cfg.ttc_threshold_controlled);
        a.ratios.push_back(ttc.ratio);
        if (ttc.never_settled) ++a.never_settled;
        ttc_rows.push_back(base + "," + arm + "," + fmt(ttc.ratio) + "," +
                           std::to_string(ttc.settle_start) + "," +
                           (ttc.never_settled ? "1" : "0"));

        const bip::PearsonResult pr = bip::pearson_matrix(ix);
        a.corr_sum += pr.r;
        ++a.n_runs;
        for (int i = 0; i < d_o; ++i)
            for (int j = d_o; j < D; ++j) {
                a.cross_abs_sum += std::abs(pr.r(i, j));
                ++a.cross_pairs;
            }

        const long w = std::llround(cfg.corr_window_s * ix.sample_rate);
        const long stride = std::max<long>(1, std::llround(cfg.corr_stride_s * ix.sample_rate));
        if (w >= 3 && w <= ix.samples()) {
            const bip::CorrHistogram h = bip::sliding_corr_histogram(ix, 0, d_o, w, stride);
            for (int b = 0; b < 20; ++b) a.hist[(size_t)b] += h.counts[(size_t)b];
            a.hist_valid += h.valid_windows;
            a.hist_skipped += h.skipped_windows;
        }

        std::array<double, 2> term{};
        const fs::path trace =
            f.parent_path() / ("phase_" + base.substr(0, base.size() - 4) + ".csv");
        if (read_terminal_phase(trace, term)) a.terminals.push_back({base, term});
    }

    if (arms.empty())
        throw bip::DataError("no executed interactions (bip_*/static_*.txt) in " + runs_dir);

    // flat tables
    {
        std::ofstream f(out / "ttc.csv");
        if (!f) throw bip::DataError("cannot write " + (out / "ttc.csv").string());
        f << "file,arm,ratio,settle_start,never_settled\n";
        for (const auto& row : ttc_rows) f << row << "\n";
    }
    for (const auto& [arm, a] : arms) {
        {
            std::ofstream f(out / ("corr_" + arm + ".csv"));
            const bip::Mat mean = a.corr_sum / (double)a.n_runs;
            for (int i = 0; i < D; ++i) {
                for (int j = 0; j < D; ++j) f << (j ? "," : "") << fmt(mean(i, j));
                f << "\n";
            }
        }
        {
            std::ofstream f(out / ("hist_" + arm + ".csv"));
            f << "bin_lo,bin_hi,count\n";
            for (int b = 0; b < 20; ++b)
                f << fmt(-1.0 + 0.1 * b) << "," << fmt(-0.9 + 0.1 * b) << ","
                  << a.hist[(size_t)b] << "\n";
        }
        if (!a.terminals.empty()) {
            std::ofstream f(out / ("phases_" + arm + ".csv"));
            f << "file,terminal_phase,terminal_phase_vel\n";
            for (const auto& [name, term] : a.terminals)
                f << name << "," << fmt(term[0]) << "," << fmt(term[1]) << "\n";
        }
    }

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / (double)v.size();
    };
    auto sample_var = [&](const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean_of(v);
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return s / (double)(v.size() - 1);
    };

    bool have_mw = arms.count("bip") && arms.count("static") && !arms["bip"].ratios.empty() &&
                   !arms["static"].ratios.empty();
    bip::MwResult mw;
    if (have_mw) mw = bip::mann_whitney_u(arms["bip"].ratios, arms["static"].ratios);

    {
        std::ofstream f(out / "metrics.csv");
        f << "metric,scenario,value\n";
        for (const auto& [arm, a] : arms) {
            f << "runs," << arm << "," << a.n_runs << "\n";
            f << "ttc_ratio_mean," << arm << "," << fmt(mean_of(a.ratios)) << "\n";
            f << "ttc_ratio_sample_var," << arm << "," << fmt(sample_var(a.ratios)) << "\n";
            f << "ttc_never_settled," << arm << "," << a.never_settled << "\n";
            f << "cross_corr_mean_abs," << arm << ","
              << fmt(a.cross_pairs ? a.cross_abs_sum / (double)a.cross_pairs : 0.0) << "\n";
            const long outside = a.hist[0] + a.hist[1] + a.hist[18] + a.hist[19];
            f << "corr_mass_outside_0.8," << arm << ","
              << fmt(a.hist_valid ? (double)outside / (double)a.hist_valid : 0.0) << "\n";
        }
        if (have_mw) {
            f << "mw_u,ttc," << fmt(mw.u) << "\n";
            f << "mw_p,ttc," << fmt(mw.p) << "\n";
        }
    }

    {
        std::ofstream f(out / "report.txt");
        long total = 0;
        for (const auto& [arm, a] : arms) total += a.n_runs;
        f << "executed runs: " << total;
        for (const auto& [arm, a] : arms) f << "  [" << arm << ": " << a.n_runs << "]";
        f << "\n\n";
        for (const auto& [arm, a] : arms) {
            f << "[" << arm << "]\n";
            f << "  completion ratio: mean " << fmt6(mean_of(a.ratios)) << " over " << a.n_runs
              << " runs (sample variance " << fmt6(sample_var(a.ratios)) << ")\n";
            f << "  never settled: " << a.never_settled << "\n";
            f << "  mean |r| over observed-vs-controlled pairs: "
              << fmt6(a.cross_pairs ? a.cross_abs_sum / (double)a.cross_pairs : 0.0) << "\n";
            const long outside = a.hist[0] + a.hist[1] + a.hist[18] + a.hist[19];
            f << "  sliding-window mass at |r| > 0.8: "
              << fmt6(a.hist_valid ? (double)outside / (double)a.hist_valid : 0.0) << " ("
              << a.hist_valid << " windows, " << a.hist_skipped << " skipped)\n";
            if (!a.terminals.empty()) {
                double s = 0;
                for (const auto& [name, term] : a.terminals) s += term[0];
                f << "  terminal phase: mean " << fmt6(s / (double)a.terminals.size()) << " over "
                  << a.terminals.size() << " traces\n";
            }
            f << "\n";
        }
        if (have_mw)
            f << "mann-whitney on completion ratios (bip vs static): U=" << fmt6(mw.u)
              << ", p=" << fmt6(mw.p) << "\n";
        else
            f << "mann-whitney: needs runs from both controllers\n";
    }

    std::printf("evaluated %zu run(s) across %zu arm(s)\n", ttc_rows.size(), arms.size());
    if (have_mw)
        std::printf("mann-whitney on completion ratios: U=%s p=%s\n", fmt6(mw.u).c_str(),
                    fmt6(mw.p).c_str());
    std::printf("wrote %s\n", (out / "report.txt").string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"interaction primitive toolkit: learn a latent two-agent interaction model "
                 "from demonstrations, run online phase inference and response generation, "
                 "generate synthetic corpora, and analyze executed runs"};
    app.require_subcommand(1);

    std::string config_path, out_dir, rates_str, demos_dir, model_path, input_path, runs_dir;
    std::string controller = "bip";
    std::uint64_t seed = 0;
    int basis = 0;

    auto* opt_config =
        app.add_option("--config", config_path, "JSON config file (explicit flags override it)");
    auto* opt_seed = app.add_option("--seed", seed, "root random seed");
    auto* opt_basis = app.add_option("--basis", basis, "basis functions per DoF");
    auto* opt_rates =
        app.add_option("--rates", rates_str, "sample,inference,execution rates in Hz");
    app.add_option("--out", out_dir, "output directory (all outputs land here)");

    CLI::App* sub_train =
        app.add_subcommand("train", "learn a model from a directory of demonstrations");
    sub_train->add_option("--demos", demos_dir, "directory of demonstration recordings")
        ->required();

    CLI::App* sub_infer =
        app.add_subcommand("infer", "replay a recording through the filter and controller");
    sub_infer->add_option("--model", model_path, "model file produced by train")->required();
    sub_infer->add_option("--input", input_path, "recorded interaction to replay")->required();
    sub_infer->add_option("--controller", controller, "bip (adaptive) or static (fixed nominal)")
        ->check(CLI::IsMember({"bip", "static"}));

    CLI::App* sub_sim =
        app.add_subcommand("simulate", "generate synthetic demonstrations and test scenarios");

    CLI::App* sub_eval =
        app.add_subcommand("eval", "analyze executed runs (bip_*/static_* recordings)");
    sub_eval->add_option("--model", model_path, "model file produced by train")->required();
    sub_eval->add_option("--runs", runs_dir, "directory of executed interactions")->required();

    for (CLI::App* sub : {sub_train, sub_infer, sub_sim, sub_eval}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (opt_config->count()) cfg = load_config(config_path);
        if (opt_seed->count()) cfg.seed = seed;
        if (opt_basis->count()) cfg.basis = basis;
        if (opt_rates->count()) apply_rates(cfg, rates_str);
        cfg.validate();

        if (out_dir.empty())
            throw bip::ConfigError("--out is required; nothing is written to the working directory");
        const fs::path out(out_dir);
        fs::create_directories(out);

        if (sub_train->parsed()) return cmd_train(cfg, demos_dir, out);
        if (sub_infer->parsed()) return cmd_infer(cfg, model_path, input_path, controller, out);
        if (sub_sim->parsed()) return cmd_simulate(cfg, out);
        if (sub_eval->parsed()) return cmd_eval(cfg, model_path, runs_dir, out);
        throw bip::ConfigError("no subcommand selected");
    } catch (const bip::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const bip::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bip::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
}
