#include "bip/interaction.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bip/numio.hpp"

namespace bip {
namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

} // namespace

void Interaction::validate() const {
    layout.validate();
    if (dofs() != layout.total()) throw DataError("data row count does not match layout");
    if (samples() < 2) throw DataError("interaction needs at least two samples");
    if (!(sample_rate > 0)) throw DataError("sample_rate must be positive");
    if (!data.allFinite()) throw DataError("interaction contains non-finite values");
}

double phase_of(long t, long T) {
    if (T < 2) throw DataError("phase_of: trajectory length must be at least 2");
    if (t < 0 || t > T - 1) throw DataError("phase_of: sample index out of range");
    return (double)t / (double)(T - 1);
}

Interaction load_interaction(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open interaction file: " + path.string());
    const std::string p = path.string();

    std::string line;
    long lineno = 0;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(p, lineno + 1, std::string("missing ") + what);
        ++lineno;
    };

    next_line("header line");
    {
        // header: D_o D_c T sample_rate [executed=true]
        std::istringstream hs{line};
        std::vector<std::string> tok;
        std::string t;
        while (hs >> t) tok.push_back(t);
        if (tok.size() != 4 && tok.size() != 5)
            throw ParseError(p, lineno, "header must be: D_o D_c T sample_rate [executed=true]");

        Interaction ix;
        long d_o = 0, d_c = 0, T = 0;
        double rate = 0;
        if (!parse_long(tok[0], d_o) || !parse_long(tok[1], d_c) || !parse_long(tok[2], T))
            throw ParseError(p, lineno, "header counts must be integers");
        if (!parse_double(tok[3], rate) || !std::isfinite(rate) || rate <= 0)
            throw ParseError(p, lineno, "sample_rate must be a positive number");
        if (tok.size() == 5) {
            if (tok[4] != "executed=true")
                throw ParseError(p, lineno, "unrecognized header flag: " + tok[4]);
            ix.executed = true;
        }
        if (d_o < 1 || d_c < 1) throw ParseError(p, lineno, "need D_o >= 1 and D_c >= 1");
        if (T < 2) throw ParseError(p, lineno, "need T >= 2");
        const long D = d_o + d_c;

        ix.layout.observed_count = (int)d_o;
        ix.layout.controlled_count = (int)d_c;
        ix.sample_rate = rate;

        next_line("DoF names line");
        for (auto part : split(line, ',')) ix.layout.names.emplace_back(trim(part));
        if ((long)ix.layout.names.size() != D)
            throw ParseError(p, lineno, "expected " + std::to_string(D) + " DoF names");

        next_line("DoF units line");
        for (auto part : split(line, ',')) ix.layout.units.emplace_back(trim(part));
        if ((long)ix.layout.units.size() != D)
            throw ParseError(p, lineno, "expected " + std::to_string(D) + " DoF units");

        ix.data.resize(D, T);
        for (long t_i = 0; t_i < T; ++t_i) {
            next_line("data line");
            auto parts = split(line, ',');
            if ((long)parts.size() != D)
                throw ParseError(p, lineno, "expected " + std::to_string(D) + " values, got " +
                                                std::to_string(parts.size()));
            for (long d = 0; d < D; ++d) {
                double v;
                if (!parse_double(parts[d], v))
                    throw ParseError(p, lineno, "bad number in column " + std::to_string(d + 1));
                if (!std::isfinite(v))
                    throw ParseError(p, lineno, "non-finite value in column " + std::to_string(d + 1));
                ix.data(d, t_i) = v;
            }
        }
        ix.validate();
        return ix;
    }
}

void save_interaction(const Interaction& ix, const std::filesystem::path& path) {
    ix.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write interaction file: " + path.string());

    out << ix.layout.observed_count << ' ' << ix.layout.controlled_count << ' ' << ix.samples()
        << ' ' << format_double(ix.sample_rate);
    if (ix.executed) out << " executed=true";
    out << '\n';

    auto join = [&out](const std::vector<std::string>& items) {
        for (size_t i = 0; i < items.size(); ++i) {
            if (i) out << ',';
            out << items[i];
        }
        out << '\n';
    };
    join(ix.layout.names);
    join(ix.layout.units);

    const long D = ix.dofs(), T = ix.samples();
    std::string row;
    for (long t = 0; t < T; ++t) {
        row.clear();
        for (long d = 0; d < D; ++d) {
            if (d) row += ',';
            row += format_double(ix.data(d, t));
        }
        row += '\n';
        out << row;
    }
    if (!out) throw DataError("write failed: " + path.string());
}

} // namespace bip
