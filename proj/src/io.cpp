#include "mixdag/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace mixdag {

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\"");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\"");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& v) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    return ec == std::errc() && ptr == t.data() + t.size();
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

CsvTable read_csv(const std::string& path) {
    auto in = open_in(path);
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool has_ids = false;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        for (auto& c : cells) c = trim(c);
        if (t.header.empty() && width == 0) {
            width = cells.size();
            has_ids = cells[0] == "unit_id";
            std::map<std::string, std::size_t> seen;
            for (std::size_t j = has_ids ? 1 : 0; j < cells.size(); ++j) {
                if (cells[j].empty()) throw ParseError(path, lineno, "empty column name in header");
                if (!seen.emplace(cells[j], j).second)
                    throw ParseError(path, lineno, "duplicate column name '" + cells[j] + "'");
                t.header.push_back(cells[j]);
            }
            if (t.header.empty()) throw ParseError(path, lineno, "header has no data columns");
            continue;
        }
        if (cells.size() != width)
            throw ParseError(path, lineno, "expected " + std::to_string(width) + " fields, found " +
                                               std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t j = has_ids ? 1 : 0; j < cells.size(); ++j) {
            double v;
            if (!parse_double(cells[j], v))
                throw ParseError(path, lineno, "non-numeric value '" + cells[j] + "' in column '" +
                                                   t.header[j - (has_ids ? 1 : 0)] + "'");
            row.push_back(v);
        }
        t.unit_ids.push_back(has_ids ? cells[0] : "u" + std::to_string(t.rows.size() + 1));
        t.rows.push_back(std::move(row));
    }
    if (width == 0) throw ParseError(path, lineno, "missing header row");
    if (has_ids) {
        std::map<std::string, std::size_t> seen;
        for (std::size_t i = 0; i < t.unit_ids.size(); ++i)
            if (!seen.emplace(t.unit_ids[i], i).second)
                throw std::runtime_error(path + ": duplicate unit id '" + t.unit_ids[i] + "'");
    }
    return t;
}

void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header,
                      const std::vector<std::string>& unit_ids) {
    auto out = open_out(path);
    out << "unit_id";
    for (const auto& h : header) out << ',' << h;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << unit_ids[i];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
        out << '\n';
    }
}

void write_dataset_csv(const std::string& path, const MixedDataset& x) {
    auto out = open_out(path);
    out << "unit_id";
    for (const auto& s : x.specs) out << ',' << s.name;
    out << '\n';
    for (std::size_t i = 0; i < x.n(); ++i) {
        out << x.unit_ids[i];
        for (std::size_t j = 0; j < x.p(); ++j) {
            out << ',';
            if (x.specs[j].is_discrete())
                out << static_cast<long>(x.values(i, j));
            else
                out << format_double(x.values(i, j));
        }
        out << '\n';
    }
}

void write_specs(const std::string& path, const std::vector<VariableSpec>& specs) {
    auto out = open_out(path);
    out << "name\tkind\tlevels\tthresholds\n";
    for (const auto& s : specs) {
        out << s.name << '\t' << (s.is_discrete() ? "discrete" : "continuous") << '\t';
        if (s.is_discrete())
            out << s.levels;
        else
            out << '-';
        out << '\t';
        if (s.thresholds.empty()) out << '-';
        for (std::size_t c = 0; c < s.thresholds.size(); ++c) out << (c ? "," : "") << format_double(s.thresholds[c]);
        out << '\n';
    }
}

std::vector<VariableSpec> read_specs(const std::string& path) {
    auto in = open_in(path);
    std::vector<VariableSpec> specs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || line[0] == '#') continue;
        auto f = split(line, '\t');
        if (f.size() != 4) throw ParseError(path, lineno, "expected 4 tab-separated fields");
        if (f[0] == "name" && f[1] == "kind") continue;
        if (f[1] == "continuous") {
            specs.push_back(VariableSpec::make_continuous(f[0]));
        } else if (f[1] == "discrete") {
            int levels = 0;
            try {
                levels = std::stoi(f[2]);
            } catch (const std::exception&) {
                throw ParseError(path, lineno, "invalid level count '" + f[2] + "'");
            }
            std::vector<double> t;
            if (trim(f[3]) != "-")
                for (const auto& cell : split(f[3], ',')) {
                    double v;
                    if (!parse_double(cell, v)) throw ParseError(path, lineno, "invalid threshold '" + cell + "'");
                    t.push_back(v);
                }
            specs.push_back(VariableSpec::make_discrete(f[0], levels, std::move(t)));
        } else {
            throw ParseError(path, lineno, "kind must be continuous or discrete, got '" + f[1] + "'");
        }
    }
    return specs;
}

void write_blocks(const std::string& path, const std::vector<std::string>& unit_ids,
                  const std::vector<std::size_t>& block) {
    auto out = open_out(path);
    out << "unit_id\tblock_id\n";
    for (std::size_t i = 0; i < unit_ids.size(); ++i) out << unit_ids[i] << '\t' << block[i] << '\n';
}

std::vector<std::size_t> read_blocks(const std::string& path, const std::vector<std::string>& unit_ids) {
    auto in = open_in(path);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < unit_ids.size(); ++i) index[unit_ids[i]] = i;
    std::vector<long> raw(unit_ids.size(), -1);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split(line, '\t');
        if (f.size() != 2) throw ParseError(path, lineno, "expected `unit_id<TAB>block_id`");
        if (f[0] == "unit_id") continue;
        const auto it = index.find(f[0]);
        if (it == index.end()) throw ParseError(path, lineno, "unknown unit id '" + f[0] + "'");
        double v;
        if (!parse_double(f[1], v) || v < 0 || v != std::floor(v))
            throw ParseError(path, lineno, "block id must be a non-negative integer");
        raw[it->second] = static_cast<long>(v);
    }
    std::map<long, std::size_t> dense;
    for (long b : raw)
        if (b >= 0) dense.emplace(b, 0);
    std::size_t next = 0;
    for (auto& [k, v] : dense) v = next++;
    std::vector<std::size_t> out(unit_ids.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] < 0) throw std::runtime_error(path + ": unit '" + unit_ids[i] + "' has no block");
        out[i] = dense[raw[i]];
    }
    return out;
}

MixedDataset load_dataset(const std::string& data_csv, const std::string& specs_tsv, const std::string& blocks_tsv) {
    const CsvTable t = read_csv(data_csv);
    auto specs = read_specs(specs_tsv);
    std::map<std::string, const VariableSpec*> by_name;
    for (const auto& s : specs) by_name[s.name] = &s;
    MixedDataset x;
    x.values.resize(t.rows.size(), t.header.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.header.size(); ++j) x.values(i, j) = t.rows[i][j];
    for (const auto& name : t.header) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw std::runtime_error(specs_tsv + ": no spec for column '" + name + "'");
        x.specs.push_back(*it->second);
    }
    x.unit_ids = t.unit_ids;
    if (!blocks_tsv.empty()) {
        x.block = read_blocks(blocks_tsv, x.unit_ids);
    } else {
        x.block.resize(x.n());
        for (std::size_t i = 0; i < x.n(); ++i) x.block[i] = i;
    }
    x.validate();
    return x;
}

void write_edges(const std::string& path, const Cpdag& g, const std::vector<std::string>& names,
                 const EdgeConfidence* conf) {
    auto out = open_out(path);
    std::vector<std::tuple<std::size_t, std::size_t, bool>> rows;
    for (const auto& [a, b] : g.directed_edges()) rows.emplace_back(a, b, true);
    for (const auto& [a, b] : g.undirected_edges()) rows.emplace_back(a, b, false);
    std::sort(rows.begin(), rows.end());
    for (const auto& [a, b, directed] : rows) {
        out << names[a] << '\t' << names[b] << '\t' << (directed ? "directed" : "undirected") << '\t';
        if (conf)
            out << format_double(directed ? conf->directed(a, b) : conf->undirected(a, b));
        else
            out << '-';
        out << '\n';
    }
}

Cpdag read_edges(const std::string& path, const std::vector<std::string>& names) {
    auto in = open_in(path);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
    Cpdag g(names.size());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split(line, '\t');
        if (f.size() < 3) throw ParseError(path, lineno, "expected `from<TAB>to<TAB>type[<TAB>confidence]`");
        if (f[0] == "from" && f[1] == "to") continue;
        const auto a = index.find(f[0]), b = index.find(f[1]);
        if (a == index.end() || b == index.end()) throw ParseError(path, lineno, "unknown node name");
        if (f[2] == "directed")
            g.set_directed(a->second, b->second);
        else if (f[2] == "undirected")
            g.set_undirected(a->second, b->second);
        else
            throw ParseError(path, lineno, "type must be directed or undirected");
    }
    return g;
}

Dag read_dag_edge_list(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::string> names;
    std::map<std::string, std::size_t> index;
    auto id = [&](const std::string& s) {
        auto [it, fresh] = index.emplace(s, names.size());
        if (fresh) names.push_back(s);
        return it->second;
    };
    std::string line;
    std::size_t lineno = 0;
    std::vector<Edge> pairs;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!(ss >> a >> b)) throw ParseError(path, lineno, "expected `from to`");
        if (a == "from" && b == "to") continue;
        if (a == b) throw ParseError(path, lineno, "self-loop on '" + a + "'");
        const std::size_t ia = id(a), ib = id(b);
        pairs.emplace_back(ia, ib);
    }
    Dag g(names.size(), names);
    for (const auto& [a, b] : pairs) g.add_edge(a, b);
    topological_order(g);
    return g;
}

void write_covariance(const std::string& path, const BlockCovariance& cov) {
    auto out = open_out(path);
    for (std::size_t b = 0; b < cov.block_count(); ++b) {
        const auto& s = cov.blocks()[b].sigma;
        out << "block " << b << ' ' << s.dim() << '\n';
        for (Eigen::Index r = 0; r < s.dim(); ++r) {
            for (Eigen::Index c = 0; c <= r; ++c) out << (c ? " " : "") << format_double(s(r, c));
            out << '\n';
        }
    }
}

BlockCovariance read_covariance(const std::string& path, const std::vector<std::vector<std::size_t>>& groups) {
    auto in = open_in(path);
    std::vector<CovarianceBlock> blocks;
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream hs(line);
        std::string tag;
        std::size_t id = 0, size = 0;
        if (!(hs >> tag >> id >> size) || tag != "block") throw ParseError(path, lineno, "expected `block <id> <size>`");
        if (id >= groups.size() || groups[id].size() != size)
            throw ParseError(path, lineno, "block " + std::to_string(id) + " does not match the block assignment");
        Matrix m(size, size);
        for (std::size_t r = 0; r < size; ++r) {
            if (!std::getline(in, line)) throw ParseError(path, lineno, "truncated block");
            ++lineno;
            std::istringstream rs(line);
            for (std::size_t c = 0; c <= r; ++c) {
                std::string cell;
                double v;
                if (!(rs >> cell) || !parse_double(cell, v)) throw ParseError(path, lineno, "invalid matrix entry");
                m(r, c) = m(c, r) = v;
            }
        }
        blocks.push_back({groups[id], SymMatrix(std::move(m))});
    }
    return BlockCovariance(n, std::move(blocks));
}

void write_preestimate(const std::string& path, const PreEstimate& pre, const std::vector<std::string>& names) {
    auto out = open_out(path);
    out << "# thresholds\nnode\tthresholds\n";
    for (std::size_t j = 0; j < pre.thresholds.size(); ++j) {
        if (pre.thresholds[j].empty()) continue;
        out << names[j] << '\t';
        for (std::size_t c = 0; c < pre.thresholds[j].size(); ++c)
            out << (c ? "," : "") << format_double(pre.thresholds[j][c]);
        out << '\n';
    }
    out << "# coefficients\nfrom\tto\tbeta\n";
    for (std::size_t j = 0; j < pre.parents.size(); ++j)
        for (std::size_t k : pre.parents[j])
            out << names[k] << '\t' << names[j] << '\t' << format_double(pre.coefficients(k, j)) << '\n';
    out << "# convergence\nnode\titeration\td_beta\td_thresholds\tloglik\n";
    for (const auto& tr : pre.trace)
        for (const auto& s : tr.steps)
            out << names[tr.node] << '\t' << s.iteration << '\t' << format_double(s.d_beta) << '\t'
                << format_double(s.d_thresholds) << '\t' << format_double(s.loglik_after_thresholds) << '\n';
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create directory " + dir);
    const auto probe = std::filesystem::path(dir) / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw std::runtime_error("output directory " + dir + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

}  // namespace mixdag
