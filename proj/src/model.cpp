#include "bip/model.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "bip/log.hpp"

namespace bip {

using nlohmann::json;

void PriorModel::validate() const {
    layout.validate();
    if ((int)basis.size() != layout.total())
        throw DataError("model: one basis config per DoF required");
    for (const auto& cfg : basis) cfg.validate();
    if ((int)w0.per_dof.size() != layout.total()) throw DataError("model: w0 block count mismatch");
    for (int d = 0; d < layout.total(); ++d)
        if (w0.per_dof[d].size() != basis[d].count)
            throw DataError("model: w0 block size mismatch at DoF " + std::to_string(d));
    const long n = state_dim();
    if (Sigma0.rows() != n || Sigma0.cols() != n) throw DataError("model: Sigma0 size mismatch");
    if (!(sample_rate > 0)) throw DataError("model: sample_rate must be positive");
    if (demo_range.size() != layout.total()) throw DataError("model: demo_range size mismatch");
}

Mat weight_covariance(const Mat& W) {
    const long N = W.rows();
    if (N < 2) throw DataError("weight_covariance: need at least two demonstrations");
    Mat centered = W.rowwise() - W.colwise().mean();
    Mat cov = centered.transpose() * centered / (double)(N - 1);
    return 0.5 * (cov + cov.transpose());
}

PriorModel learn_prior(const std::vector<Interaction>& demos, const std::vector<BasisConfig>& cfgs) {
    const long N = (long)demos.size();
    if (N < 2) throw DataError("learn_prior: need at least two demonstrations");
    for (const auto& ix : demos) ix.validate();
    for (long i = 1; i < N; ++i) {
        if (!(demos[i].layout == demos[0].layout))
            throw DataError("learn_prior: demonstration " + std::to_string(i) +
                            " has a different DoF layout");
        if (demos[i].sample_rate != demos[0].sample_rate)
            throw DataError("learn_prior: demonstration " + std::to_string(i) +
                            " has a different sample rate (resampling is not supported)");
    }

    PriorModel m;
    m.layout = demos[0].layout;
    m.sample_rate = demos[0].sample_rate;
    m.basis = cfgs;
    m.demo_count = (int)N;

    const int D = m.layout.total();
    Mat W(N, 0);
    {
        // decompose all demos; fix total width from the first
        std::vector<Vec> rows;
        rows.reserve(N);
        for (long i = 0; i < N; ++i) {
            try {
                rows.push_back(decompose_interaction(demos[i], cfgs).flattened());
            } catch (const Error& e) {
                throw DataError("learn_prior: demonstration " + std::to_string(i) + ": " + e.what());
            }
        }
        W.resize(N, rows[0].size());
        for (long i = 0; i < N; ++i) W.row(i) = rows[i].transpose();
    }

    const long B = W.cols();
    Vec w0 = W.colwise().mean().transpose();
    m.w0.per_dof.resize(D);
    {
        long off = 0;
        for (int d = 0; d < D; ++d) {
            m.w0.per_dof[d] = w0.segment(off, cfgs[d].count);
            off += cfgs[d].count;
        }
    }

    // phase velocity: mean of per-demo reciprocal lengths (phase per sample)
    double pv_sum = 0.0, pv_sq = 0.0, len_sum = 0.0;
    for (const auto& ix : demos) {
        const double pv = 1.0 / (double)ix.samples();
        pv_sum += pv;
        pv_sq += pv * pv;
        len_sum += (double)ix.samples();
    }
    m.phase_vel0 = pv_sum / (double)N;
    const double var_pv = (pv_sq - pv_sum * pv_sum / (double)N) / (double)(N - 1);
    m.var_phase_vel0 = std::max(var_pv, 1e-8);
    m.mean_demo_length = len_sum / (double)N;

    m.Sigma0 = Mat::Zero(B + 2, B + 2);
    m.Sigma0(0, 0) = m.var_phase0;
    m.Sigma0(1, 1) = m.var_phase_vel0;
    m.Sigma0.block(2, 2, B, B) = weight_covariance(W);

    // per-DoF value range across the whole corpus, floored to avoid zero scales
    m.demo_range.resize(D);
    for (int d = 0; d < D; ++d) {
        double lo = demos[0].data(d, 0), hi = lo;
        for (const auto& ix : demos) {
            lo = std::min(lo, ix.data.row(d).minCoeff());
            hi = std::max(hi, ix.data.row(d).maxCoeff());
        }
        m.demo_range[d] = std::max(hi - lo, 1e-9);
    }

    m.validate();
    return m;
}

namespace {

json vec_to_json(const Vec& v) {
    json arr = json::array();
    for (long i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vec json_to_vec(const json& arr, const char* what) {
    if (!arr.is_array()) throw DataError(std::string("model file: ") + what + " must be an array");
    Vec v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
    return v;
}

} // namespace

void save_model(const PriorModel& model, const std::filesystem::path& path) {
    model.validate();
    json j;
    j["format_version"] = 1;
    j["layout"] = {{"observed_count", model.layout.observed_count},
                   {"controlled_count", model.layout.controlled_count},
                   {"names", model.layout.names},
                   {"units", model.layout.units}};
    j["sample_rate"] = model.sample_rate;
    json basis_arr = json::array();
    for (const auto& cfg : model.basis)
        basis_arr.push_back({{"count", cfg.count}, {"width", cfg.width}, {"centers", vec_to_json(cfg.centers)}});
    j["basis"] = basis_arr;
    j["w0"] = vec_to_json(model.w0.flattened());
    j["phase0"] = model.phase0;
    j["phase_vel0"] = model.phase_vel0;
    j["var_phase0"] = model.var_phase0;
    j["var_phase_vel0"] = model.var_phase_vel0;
    {
        const long n = model.state_dim();
        json sig = json::array();
        for (long r = 0; r < n; ++r)
            for (long c = 0; c < n; ++c) sig.push_back(model.Sigma0(r, c));
        j["sigma0_row_major"] = std::move(sig);
    }
    j["demo_range"] = vec_to_json(model.demo_range);
    j["mean_demo_length"] = model.mean_demo_length;
    j["demo_count"] = model.demo_count;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file: " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

PriorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("model file " + path.string() + ": " + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1)
            throw DataError("model file: unsupported format_version");
        PriorModel m;
        const auto& jl = j.at("layout");
        m.layout.observed_count = jl.at("observed_count").get<int>();
        m.layout.controlled_count = jl.at("controlled_count").get<int>();
        m.layout.names = jl.at("names").get<std::vector<std::string>>();
        m.layout.units = jl.at("units").get<std::vector<std::string>>();
        m.sample_rate = j.at("sample_rate").get<double>();
        for (const auto& jb : j.at("basis")) {
            BasisConfig cfg;
            cfg.count = jb.at("count").get<int>();
            cfg.width = jb.at("width").get<double>();
            cfg.centers = json_to_vec(jb.at("centers"), "basis centers");
            m.basis.push_back(std::move(cfg));
        }
        Vec w0 = json_to_vec(j.at("w0"), "w0");
        m.w0.per_dof.resize(m.layout.total());
        long off = 0;
        for (int d = 0; d < m.layout.total(); ++d) {
            if (off + m.basis[d].count > w0.size()) throw DataError("model file: w0 too short");
            m.w0.per_dof[d] = w0.segment(off, m.basis[d].count);
            off += m.basis[d].count;
        }
        if (off != w0.size()) throw DataError("model file: w0 length mismatch");
        m.phase0 = j.at("phase0").get<double>();
        m.phase_vel0 = j.at("phase_vel0").get<double>();
        m.var_phase0 = j.at("var_phase0").get<double>();
        m.var_phase_vel0 = j.at("var_phase_vel0").get<double>();
        const long n = m.state_dim();
        Vec sig = json_to_vec(j.at("sigma0_row_major"), "sigma0");
        if (sig.size() != n * n) throw DataError("model file: sigma0 size mismatch");
        m.Sigma0.resize(n, n);
        for (long r = 0; r < n; ++r)
            for (long c = 0; c < n; ++c) m.Sigma0(r, c) = sig[r * n + c];
        m.demo_range = json_to_vec(j.at("demo_range"), "demo_range");
        m.mean_demo_length = j.at("mean_demo_length").get<double>();
        m.demo_count = j.at("demo_count").get<int>();
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw DataError("model file " + path.string() + ": " + e.what());
    }
}

} // namespace bip
