#include "gfrag/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gfrag/errors.hpp"

namespace gfrag {

namespace fs = std::filesystem;

static std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments outside quotes
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

static std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

KeyValues read_key_values(const std::string& path) { return parse_key_values(slurp(path)); }

namespace {

struct Reader {
    const KeyValues& kv;
    KeyValues& out;
    std::map<std::string, bool> used;

    std::string str(const std::string& k, const std::string& def) {
        used[k] = true;
        auto it = kv.find(k);
        std::string v = it == kv.end() ? def : it->second;
        out[k] = v;
        return v;
    }
    std::string required(const std::string& k) {
        used[k] = true;
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError("missing key '" + k + "'");
        out[k] = it->second;
        return it->second;
    }
    double num(const std::string& k, const std::string& def) { return to_num(k, str(k, def)); }
    double num_required(const std::string& k) { return to_num(k, required(k)); }
    static double to_num(const std::string& k, const std::string& v) {
        try {
            std::size_t pos = 0;
            double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("key '" + k + "' is not a number: " + v);
        }
    }
};

std::string resolve(const std::string& base, const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? p : (fs::path(base) / q).string();
}

RateSpec read_rate(Reader& r, const std::string& prefix, const std::string& def_kind, const std::string& base) {
    std::string kind = def_kind.empty() ? r.required(prefix + ".kind") : r.str(prefix + ".kind", def_kind);
    if (kind == "power") return RateSpec::power(r.num(prefix + ".exponent", "1"));
    if (kind == "capped-quadratic") return RateSpec::capped_quadratic();
    if (kind == "gaussian-bump") return RateSpec::gaussian_bump();
    if (kind == "tray") return RateSpec::tray();
    if (kind == "table") return RateSpec::from_table(read_table(resolve(base, r.required(prefix + ".table"))));
    throw ConfigError("unknown " + prefix + ".kind '" + kind + "'");
}

}  // namespace

LoadedConfig load_config(const KeyValues& kv, const std::string& base) {
    LoadedConfig lc;
    Reader r{kv, lc.resolved, {}};
    double L = r.num_required("L");
    double ka_d = r.num_required("ka");
    if (ka_d != std::floor(ka_d)) throw ConfigError("ka must be an integer");
    double c = r.num_required("c");
    RateSpec g = read_rate(r, "g", "power", base);
    RateSpec B = read_rate(r, "B", "", base);

    KernelSpec ks;
    std::string kk = r.str("kernel.kind", "uniform");
    if (kk == "uniform") ks = KernelSpec::uniform();
    else if (kk == "gaussian") ks = KernelSpec::gaussian(r.num("kernel.mu", "0.5"), r.num("kernel.sigma", "0.5"));
    else if (kk == "mitosis") ks = KernelSpec::mitosis();
    else if (kk == "user") ks = KernelSpec::user(read_table(resolve(base, r.required("kernel.profile"))));
    else throw ConfigError("unknown kernel.kind '" + kk + "'");
    std::string mc = r.str("kernel.moment_correction", "true");
    if (mc != "true" && mc != "false") throw ConfigError("kernel.moment_correction must be true or false");
    ks.moment_correction = mc == "true";

    InitialSpec init;
    std::string ik = r.str("initial.kind", "step");
    if (ik == "step") init.kind = InitialSpec::Kind::step;
    else if (ik == "maxwellian") init.kind = InitialSpec::Kind::maxwellian;
    else if (ik == "table") {
        init.kind = InitialSpec::Kind::table;
        init.table = read_table(resolve(base, r.required("initial.table")));
    } else throw ConfigError("unknown initial.kind '" + ik + "'");

    lc.solver.tol = r.num("solver.tol", "1e-10");
    lc.solver.max_steps = static_cast<long>(r.num("solver.max_steps", "5000000"));
    lc.solver.safety = r.num("solver.safety", "0.9");

    for (auto& [k, v] : kv)
        if (!r.used.count(k)) throw ConfigError("unknown key '" + k + "'");

    try {
        lc.problem = make_config(L, static_cast<int>(ka_d), c, g, B, ks, init);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return lc;
}

LoadedConfig load_config_file(const std::string& path) {
    return load_config(read_key_values(path), fs::path(path).parent_path().string().empty()
                                                  ? std::string(".")
                                                  : fs::path(path).parent_path().string());
}

CsvTable read_csv(const std::string& path) {
    std::istringstream in(slurp(path));
    CsvTable t;
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(trim(cell));
        if (first) {
            first = false;
            bool numeric = true;
            try {
                for (auto& c : cells) Reader::to_num("csv", c);
            } catch (const ConfigError&) {
                numeric = false;
            }
            t.columns.resize(cells.size());
            if (!numeric) {
                t.header = cells;
                continue;
            }
        }
        if (cells.size() != t.columns.size())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": ragged row");
        for (std::size_t i = 0; i < cells.size(); ++i) t.columns[i].push_back(Reader::to_num("csv", cells[i]));
    }
    if (t.columns.empty()) throw ConfigError(path + ": empty csv");
    return t;
}

Table read_table(const std::string& path) {
    CsvTable t = read_csv(path);
    if (t.columns.size() < 2) throw ConfigError(path + ": need two columns");
    Table out;
    for (std::size_t i = 0; i < t.columns[0].size(); ++i) out.emplace_back(t.columns[0][i], t.columns[1][i]);
    return out;
}

std::string format_double(double v) {
    char buf[32];
    for (int prec : {15, 16, 17}) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns) {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += '\n';
    std::size_t n = columns.empty() ? 0 : columns[0].size();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) s += ',';
            s += format_double(columns[c][r]);
        }
        s += '\n';
    }
    return s;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write " + tmp.string());
        f << content;
        if (!f) throw ConfigError("write failed for " + tmp.string());
    }
    fs::rename(tmp, p);
}

GridFunction grid_function_from_csv(const CsvTable& t, const Grid& grid, std::size_t column) {
    if (t.columns.size() <= column) throw ConfigError("csv lacks column " + std::to_string(column));
    const auto& xs = t.columns[0];
    const auto& vs = t.columns[column];
    if (vs.size() != grid.size()) throw ConfigError("csv has " + std::to_string(vs.size()) + " rows, grid needs " +
                                                    std::to_string(grid.size()));
    for (int i = 0; i <= grid.ka; ++i)
        if (std::abs(xs[i] - grid.x(i)) > 1e-9 * std::max(1.0, grid.L))
            throw ConfigError("csv abscissae do not match the grid");
    return GridFunction(grid, vs);
}

}  // namespace gfrag
