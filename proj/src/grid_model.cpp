#include "dne/grid_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <sstream>

#include "dne/error.hpp"

namespace dne {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void data_error(const std::string& msg) { throw Error(ErrorKind::Data, msg); }

[[noreturn]] void parse_error(int line, const std::string& msg) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + msg);
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::optional<double> to_number(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s == "Inf" || s == "inf") return kInf;
    if (s == "-Inf" || s == "-inf") return -kInf;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------- tokenizer

struct Token {
    enum Kind { Ident, Number, String, LBracket, RBracket, Semi, Comma, Assign, Newline, End } kind;
    std::string text;
    double value = 0.0;
    int line = 0;
};

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    int line = 1;
    std::size_t i = 0;
    const auto n = src.size();
    while (i < n) {
        const char c = src[i];
        if (c == '%' || c == '#') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '\n') {
            out.push_back({Token::Newline, "", 0.0, line});
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '.' && i + 2 < n && src[i + 1] == '.' && src[i + 2] == '.') {
            // continuation: skip to end of line, newline swallowed
            while (i < n && src[i] != '\n') ++i;
            if (i < n) {
                ++line;
                ++i;
            }
            continue;
        }
        switch (c) {
            case '[': out.push_back({Token::LBracket, "[", 0.0, line}); ++i; continue;
            case ']': out.push_back({Token::RBracket, "]", 0.0, line}); ++i; continue;
            case ';': out.push_back({Token::Semi, ";", 0.0, line}); ++i; continue;
            case ',': out.push_back({Token::Comma, ",", 0.0, line}); ++i; continue;
            case '=': out.push_back({Token::Assign, "=", 0.0, line}); ++i; continue;
            default: break;
        }
        if (c == '\'' || c == '"') {
            const std::size_t j = src.find(c, i + 1);
            if (j == std::string_view::npos || src.substr(i, j - i).find('\n') != std::string_view::npos)
                parse_error(line, "unterminated string");
            out.push_back({Token::String, std::string(src.substr(i + 1, j - i - 1)), 0.0, line});
            i = j + 1;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < n && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '.')) ++j;
            std::string word(src.substr(i, j - i));
            if (word == "Inf" || word == "inf")
                out.push_back({Token::Number, word, kInf, line});
            else
                out.push_back({Token::Ident, word, 0.0, line});
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            std::size_t j = i + 1;
            while (j < n) {
                const char d = src[j];
                if (std::isdigit(static_cast<unsigned char>(d)) || d == '.' || d == 'e' || d == 'E' ||
                    ((d == '-' || d == '+') && (src[j - 1] == 'e' || src[j - 1] == 'E')))
                    ++j;
                else if ((c == '-' || c == '+') && std::isalpha(static_cast<unsigned char>(d)))
                    ++j;  // -Inf
                else
                    break;
            }
            const auto word = src.substr(i, j - i);
            const auto v = to_number(word);
            if (!v) parse_error(line, "bad number '" + std::string(word) + "'");
            out.push_back({Token::Number, std::string(word), *v, line});
            i = j;
            continue;
        }
        parse_error(line, std::string("unexpected character '") + c + "'");
    }
    out.push_back({Token::End, "", 0.0, line});
    return out;
}

// ---------------------------------------------------------------- statements

struct Table {
    std::vector<std::vector<double>> rows;
    std::vector<int> row_lines;
    int line = 0;
};

struct Statement {
    std::string name;
    int line = 0;
    std::optional<double> number;
    std::optional<std::string> text;
    std::optional<Table> table;
};

std::vector<Statement> parse_statements(const std::vector<Token>& toks) {
    std::vector<Statement> out;
    std::size_t p = 0;
    auto skip_newlines = [&] {
        while (toks[p].kind == Token::Newline || toks[p].kind == Token::Semi || toks[p].kind == Token::Comma) ++p;
    };
    while (true) {
        skip_newlines();
        if (toks[p].kind == Token::End) break;
        const Token& head = toks[p];
        if (head.kind == Token::Ident && head.text == "function") {
            while (toks[p].kind != Token::Newline && toks[p].kind != Token::End) ++p;
            continue;
        }
        if (head.kind != Token::Ident) parse_error(head.line, "expected a name, found '" + head.text + "'");
        ++p;
        if (toks[p].kind != Token::Assign) parse_error(toks[p].line, "expected '=' after " + head.text);
        ++p;
        Statement st;
        st.name = head.text;
        st.line = head.line;
        const Token& v = toks[p];
        if (v.kind == Token::Number) {
            st.number = v.value;
            ++p;
        } else if (v.kind == Token::String) {
            st.text = v.text;
            ++p;
        } else if (v.kind == Token::LBracket) {
            Table t;
            t.line = v.line;
            ++p;
            std::vector<double> row;
            int row_line = toks[p].line;
            auto flush = [&] {
                if (row.empty()) return;
                if (!t.rows.empty() && row.size() != t.rows.front().size())
                    parse_error(row_line, head.text + ": row has " + std::to_string(row.size()) +
                                              " entries, expected " + std::to_string(t.rows.front().size()));
                t.rows.push_back(std::move(row));
                t.row_lines.push_back(row_line);
                row.clear();
            };
            while (true) {
                const Token& k = toks[p];
                if (k.kind == Token::End) parse_error(v.line, head.text + ": missing ']'");
                if (k.kind == Token::RBracket) {
                    flush();
                    ++p;
                    break;
                }
                if (k.kind == Token::Semi || k.kind == Token::Newline) {
                    flush();
                    ++p;
                    row_line = toks[p].line;
                    continue;
                }
                if (k.kind == Token::Comma) {
                    ++p;
                    continue;
                }
                if (k.kind != Token::Number)
                    parse_error(k.line, head.text + ": non-numeric entry '" + k.text + "'");
                if (row.empty()) row_line = k.line;
                row.push_back(k.value);
                ++p;
            }
            st.table = std::move(t);
        } else {
            parse_error(v.line, "expected a value after '" + head.text + " ='");
        }
        if (toks[p].kind != Token::Semi && toks[p].kind != Token::Newline && toks[p].kind != Token::End)
            parse_error(toks[p].line, "expected ';' after " + head.text);
        out.push_back(std::move(st));
    }
    return out;
}

const Table& need_table(const std::map<std::string, Statement>& s, const std::string& key) {
    auto it = s.find(key);
    if (it == s.end() || !it->second.table) throw Error(ErrorKind::Parse, "missing table " + key);
    return *it->second.table;
}

const Table* find_table(const std::map<std::string, Statement>& s, const std::string& key) {
    auto it = s.find(key);
    if (it == s.end()) return nullptr;
    if (!it->second.table) parse_error(it->second.line, key + " must be a matrix");
    return &*it->second.table;
}

void need_columns(const Table& t, std::size_t n, const std::string& key) {
    if (!t.rows.empty() && t.rows.front().size() < n)
        parse_error(t.row_lines.front(), key + " needs at least " + std::to_string(n) + " columns");
}

int as_int(double v, int line, const std::string& what) {
    if (!std::isfinite(v) || v != std::floor(v)) parse_error(line, what + " must be an integer");
    return static_cast<int>(v);
}

std::vector<double> flatten(const Table& t) {
    std::vector<double> v;
    for (const auto& r : t.rows) v.insert(v.end(), r.begin(), r.end());
    return v;
}

}  // namespace

// ---------------------------------------------------------------- CostCurve

CostCurve CostCurve::linear(double c1, double c0) {
    CostCurve c;
    c.kind = Kind::Linear;
    c.c1 = c1;
    c.c0 = c0;
    return c;
}

CostCurve CostCurve::quadratic(double c2, double c1, double c0) {
    CostCurve c;
    c.kind = Kind::Quadratic;
    c.c2 = c2;
    c.c1 = c1;
    c.c0 = c0;
    return c;
}

CostCurve CostCurve::piecewise(std::vector<std::pair<double, double>> pts) {
    CostCurve c;
    c.kind = Kind::PiecewiseLinear;
    c.points = std::move(pts);
    return c;
}

double CostCurve::evaluate(double p) const {
    switch (kind) {
        case Kind::Linear: return c1 * p + c0;
        case Kind::Quadratic: return (c2 * p + c1) * p + c0;
        case Kind::PiecewiseLinear: {
            if (points.size() < 2) return points.empty() ? 0.0 : points.front().second;
            std::size_t s = 0;
            while (s + 2 < points.size() && p > points[s + 1].first) ++s;
            const auto& [x0, y0] = points[s];
            const auto& [x1, y1] = points[s + 1];
            return y0 + (y1 - y0) / (x1 - x0) * (p - x0);
        }
    }
    return 0.0;
}

void CostCurve::validate(const std::string& where) const {
    if (kind == Kind::Quadratic && c2 < 0.0) data_error(where + ".cost: quadratic coefficient is negative");
    if (kind == Kind::PiecewiseLinear) {
        if (points.size() < 2) data_error(where + ".cost: piecewise curve needs at least two points");
        double prev = -kInf;
        for (std::size_t s = 0; s + 1 < points.size(); ++s) {
            const double dx = points[s + 1].first - points[s].first;
            if (!(dx > 0.0)) data_error(where + ".cost: breakpoints must be strictly increasing");
            const double slope = (points[s + 1].second - points[s].second) / dx;
            if (slope < prev - 1e-12 * std::max(1.0, std::abs(prev)))
                data_error(where + ".cost: piecewise slopes must be nondecreasing");
            prev = slope;
        }
    }
}

// ---------------------------------------------------------------- GridCase

int GridCase::slack_bus() const {
    for (int n = 0; n < num_buses(); ++n)
        if (buses[n].slack) return n;
    return -1;
}

int GridCase::bus_index(int id) const {
    for (int n = 0; n < num_buses(); ++n)
        if (buses[n].id == id) return n;
    data_error("unknown bus id " + std::to_string(id));
}

void GridCase::validate() const {
    const int N = num_buses(), T = periods(), K = num_renewables(), I = num_generators();
    if (N == 0) data_error("case has no buses");
    if (T < 1) data_error("time.periods must be >= 1");
    if (!(time.dispatch_minutes > 0.0)) data_error("time.dispatch_minutes must be positive");
    if (!(time.response_minutes > 0.0)) data_error("time.response_minutes must be positive");
    int slacks = 0;
    for (const auto& b : buses) slacks += b.slack ? 1 : 0;
    if (slacks == 0) data_error("missing slack bus");
    if (slacks > 1) data_error("more than one slack bus");
    for (int a = 0; a < N; ++a)
        for (int b = a + 1; b < N; ++b)
            if (buses[a].id == buses[b].id) data_error("duplicate bus id " + std::to_string(buses[a].id));
    auto check_bus = [&](int b, const std::string& where) {
        if (b < 0 || b >= N) data_error(where + ".bus: bus does not exist");
    };
    for (int l = 0; l < num_lines(); ++l) {
        const auto& ln = lines[l];
        const std::string w = "line[" + std::to_string(l) + "]";
        check_bus(ln.from, w + ".from");
        check_bus(ln.to, w + ".to");
        if (ln.from == ln.to) data_error(w + ": from and to buses coincide");
        if (!(ln.reactance > 0.0)) data_error(w + ".reactance must be positive");
        if (!(ln.capacity >= 0.0)) data_error(w + ".capacity must be >= 0");
    }
    for (int i = 0; i < I; ++i) {
        const auto& g = generators[i];
        const std::string w = "generator[" + std::to_string(i) + "]";
        check_bus(g.bus, w);
        if (!(g.p_min <= g.p_max)) data_error(w + ".p_min: p_min > p_max");
        if (!(g.ramp_up >= 0.0)) data_error(w + ".ramp_up must be >= 0");
        if (!(g.ramp_down >= 0.0)) data_error(w + ".ramp_down must be >= 0");
        g.cost.validate(w);
    }
    for (int k = 0; k < K; ++k) {
        const auto& r = renewables[k];
        const std::string w = "renewable[" + std::to_string(k) + "]";
        check_bus(r.bus, w);
        if (!(r.w_min >= 0.0)) data_error(w + ".w_min must be >= 0");
        if (!(r.w_min <= r.w_max)) data_error(w + ".w_min: w_min > w_max");
    }
    if (load.rows() != N || load.cols() != T)
        data_error("load: expected " + std::to_string(N) + "x" + std::to_string(T) + " table");
    if (!load.allFinite()) data_error("load: non-finite entry");
    if (forecast.rows() != K || forecast.cols() != T)
        data_error("forecast: expected " + std::to_string(K) + "x" + std::to_string(T) + " table");
    for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t) {
            const double w = forecast(k, t);
            if (!(w >= renewables[k].w_min - 1e-9 && w <= renewables[k].w_max + 1e-9))
                data_error("forecast[" + std::to_string(k) + "][" + std::to_string(t) +
                           "]: outside [w_min, w_max]");
        }
    if (!initial_dispatch.empty() && static_cast<int>(initial_dispatch.size()) != I)
        data_error("initial: expected one entry per generator");
    if (shift_factors.size() != 0) {
        if (shift_factors.rows() != N || shift_factors.cols() != num_lines())
            data_error("shift_factors: wrong shape");
        if (shift_factors.row(slack_bus()).cwiseAbs().maxCoeff() != 0.0)
            data_error("shift_factors: slack row must be zero");
    }
}

bool structurally_equal(const GridCase& a, const GridCase& b, double tol) {
    auto close = [tol](double x, double y) {
        if (x == y) return true;
        return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)});
    };
    auto mat_close = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (!close(x.data()[i], y.data()[i])) return false;
        return true;
    };
    if (a.name != b.name || !close(a.base_mva, b.base_mva) || a.time != b.time) return false;
    if (a.buses.size() != b.buses.size() || a.lines.size() != b.lines.size() ||
        a.generators.size() != b.generators.size() || a.renewables.size() != b.renewables.size())
        return false;
    for (std::size_t n = 0; n < a.buses.size(); ++n)
        if (a.buses[n].id != b.buses[n].id || a.buses[n].slack != b.buses[n].slack ||
            !close(a.buses[n].base_load, b.buses[n].base_load))
            return false;
    for (std::size_t l = 0; l < a.lines.size(); ++l) {
        const auto &x = a.lines[l], &y = b.lines[l];
        if (x.from != y.from || x.to != y.to || !close(x.reactance, y.reactance) || !close(x.capacity, y.capacity))
            return false;
    }
    for (std::size_t i = 0; i < a.generators.size(); ++i) {
        const auto &x = a.generators[i], &y = b.generators[i];
        if (x.bus != y.bus || x.agc != y.agc || !close(x.p_min, y.p_min) || !close(x.p_max, y.p_max) ||
            !close(x.ramp_up, y.ramp_up) || !close(x.ramp_down, y.ramp_down) || x.cost.kind != y.cost.kind ||
            !close(x.cost.c2, y.cost.c2) || !close(x.cost.c1, y.cost.c1) || !close(x.cost.c0, y.cost.c0) ||
            x.cost.points.size() != y.cost.points.size())
            return false;
        for (std::size_t s = 0; s < x.cost.points.size(); ++s)
            if (!close(x.cost.points[s].first, y.cost.points[s].first) ||
                !close(x.cost.points[s].second, y.cost.points[s].second))
                return false;
    }
    for (std::size_t k = 0; k < a.renewables.size(); ++k) {
        const auto &x = a.renewables[k], &y = b.renewables[k];
        if (x.bus != y.bus || !close(x.w_min, y.w_min) || !close(x.w_max, y.w_max)) return false;
    }
    if (a.initial_dispatch.size() != b.initial_dispatch.size()) return false;
    for (std::size_t i = 0; i < a.initial_dispatch.size(); ++i)
        if (!close(a.initial_dispatch[i], b.initial_dispatch[i])) return false;
    return mat_close(a.load, b.load) && mat_close(a.forecast, b.forecast) &&
           mat_close(a.shift_factors, b.shift_factors);
}

// ---------------------------------------------------------------- parse

GridCase parse_case(std::string_view text) {
    const auto stmts = parse_statements(tokenize(text));
    std::map<std::string, Statement> by_name;
    for (const auto& s : stmts) {
        if (by_name.count(s.name)) parse_error(s.line, "duplicate definition of " + s.name);
        by_name.emplace(s.name, s);
    }

    GridCase g;
    if (auto it = by_name.find("mpc.name"); it != by_name.end() && it->second.text) g.name = *it->second.text;
    if (auto it = by_name.find("mpc.baseMVA"); it != by_name.end()) {
        if (!it->second.number) parse_error(it->second.line, "mpc.baseMVA must be a number");
        g.base_mva = *it->second.number;
        if (!(g.base_mva > 0.0)) parse_error(it->second.line, "mpc.baseMVA must be positive");
    }

    // time: T, Delta_d, Delta_r
    {
        const Table& t = need_table(by_name, "mpc.time");
        const auto v = flatten(t);
        if (v.size() != 3) parse_error(t.line, "mpc.time must hold [T, dispatch_minutes, response_minutes]");
        g.time.periods = as_int(v[0], t.line, "mpc.time T");
        g.time.dispatch_minutes = v[1];
        g.time.response_minutes = v[2];
        if (g.time.periods < 1) parse_error(t.line, "mpc.time T must be >= 1");
    }
    const int T = g.time.periods;

    const Table& bus = need_table(by_name, "mpc.bus");
    need_columns(bus, 3, "mpc.bus");
    for (std::size_t r = 0; r < bus.rows.size(); ++r) {
        Bus b;
        b.id = as_int(bus.rows[r][0], bus.row_lines[r], "bus id");
        b.slack = bus.rows[r][1] == 3.0;
        b.base_load = bus.rows[r][2];
        g.buses.push_back(b);
    }
    auto bus_at = [&](double id, int line) {
        const int want = as_int(id, line, "bus id");
        for (int n = 0; n < g.num_buses(); ++n)
            if (g.buses[n].id == want) return n;
        parse_error(line, "bus " + std::to_string(want) + " does not exist");
    };

    const Table& branch = need_table(by_name, "mpc.branch");
    need_columns(branch, 6, "mpc.branch");
    for (std::size_t r = 0; r < branch.rows.size(); ++r) {
        const auto& row = branch.rows[r];
        if (row.size() >= 11 && row[10] == 0.0) continue;  // out of service
        Line ln;
        ln.from = bus_at(row[0], branch.row_lines[r]);
        ln.to = bus_at(row[1], branch.row_lines[r]);
        ln.reactance = row[3];
        ln.capacity = row[5] == 0.0 ? kInf : row[5];
        g.lines.push_back(ln);
    }

    const Table& gen = need_table(by_name, "mpc.gen");
    need_columns(gen, 10, "mpc.gen");
    const Table& gencost = need_table(by_name, "mpc.gencost");
    need_columns(gencost, 4, "mpc.gencost");
    if (gencost.rows.size() < gen.rows.size())
        parse_error(gencost.line, "mpc.gencost needs one row per generator");
    for (std::size_t r = 0; r < gen.rows.size(); ++r) {
        const auto& row = gen.rows[r];
        const int line = gen.row_lines[r];
        if (row[7] <= 0.0) continue;  // out of service
        Generator u;
        u.bus = bus_at(row[0], line);
        u.p_max = row[8];
        u.p_min = row[9];
        const double ramp = row.size() >= 17 ? row[16] : 0.0;
        u.ramp_up = u.ramp_down = ramp > 0.0 ? ramp : kInf;
        u.agc = row.size() >= 21 ? row[20] > 0.0 : true;

        const auto& c = gencost.rows[r];
        const int cl = gencost.row_lines[r];
        const int model = as_int(c[0], cl, "gencost model");
        const int ncost = as_int(c[3], cl, "gencost ncost");
        if (model == 2) {
            if (ncost < 1 || ncost > 3) parse_error(cl, "polynomial cost must have 1 to 3 coefficients");
            if (c.size() < 4 + static_cast<std::size_t>(ncost)) parse_error(cl, "gencost row too short");
            std::vector<double> coef(c.begin() + 4, c.begin() + 4 + ncost);
            if (ncost == 3)
                u.cost = CostCurve::quadratic(coef[0], coef[1], coef[2]);
            else if (ncost == 2)
                u.cost = CostCurve::linear(coef[0], coef[1]);
            else
                u.cost = CostCurve::linear(0.0, coef[0]);
        } else if (model == 1) {
            if (ncost < 2) parse_error(cl, "piecewise cost needs at least two points");
            if (c.size() < 4 + 2 * static_cast<std::size_t>(ncost)) parse_error(cl, "gencost row too short");
            std::vector<std::pair<double, double>> pts;
            for (int s = 0; s < ncost; ++s) pts.emplace_back(c[4 + 2 * s], c[5 + 2 * s]);
            u.cost = CostCurve::piecewise(std::move(pts));
        } else {
            parse_error(cl, "unknown gencost model " + std::to_string(model));
        }
        g.generators.push_back(u);
    }
    if (const Table* ramp = find_table(by_name, "mpc.ramp")) {
        if (ramp->rows.size() != g.generators.size())
            parse_error(ramp->line, "mpc.ramp needs one row per in-service generator");
        need_columns(*ramp, 2, "mpc.ramp");
        for (std::size_t i = 0; i < ramp->rows.size(); ++i) {
            g.generators[i].ramp_up = ramp->rows[i][0];
            g.generators[i].ramp_down = ramp->rows[i][1];
        }
    }

    if (const Table* ren = find_table(by_name, "mpc.renewables")) {
        need_columns(*ren, 3, "mpc.renewables");
        for (std::size_t r = 0; r < ren->rows.size(); ++r) {
            Renewable w;
            w.bus = bus_at(ren->rows[r][0], ren->row_lines[r]);
            w.w_min = ren->rows[r][1];
            w.w_max = ren->rows[r][2];
            g.renewables.push_back(w);
        }
    }
    const int N = g.num_buses(), K = g.num_renewables();

    // slack: type-3 bus, else the first generator bus
    if (g.slack_bus() < 0) {
        if (g.generators.empty()) data_error("missing slack bus");
        g.buses[g.generators.front().bus].slack = true;
    }

    g.load.resize(N, T);
    if (const Table* ld = find_table(by_name, "mpc.load")) {
        if (static_cast<int>(ld->rows.size()) != T)
            parse_error(ld->line, "mpc.load has " + std::to_string(ld->rows.size()) + " rows, expected " +
                                      std::to_string(T));
        need_columns(*ld, N, "mpc.load");
        if (!ld->rows.empty() && static_cast<int>(ld->rows.front().size()) != N)
            parse_error(ld->line, "mpc.load needs one column per bus");
        for (int t = 0; t < T; ++t)
            for (int n = 0; n < N; ++n) g.load(n, t) = ld->rows[t][n];
    } else {
        std::vector<double> profile(T, 1.0);
        if (const Table* pr = find_table(by_name, "mpc.profile")) {
            profile = flatten(*pr);
            if (static_cast<int>(profile.size()) != T)
                parse_error(pr->line, "mpc.profile has " + std::to_string(profile.size()) +
                                          " entries, expected " + std::to_string(T));
        }
        for (int n = 0; n < N; ++n)
            for (int t = 0; t < T; ++t) g.load(n, t) = g.buses[n].base_load * profile[t];
    }

    g.forecast.resize(K, T);
    if (const Table* fc = find_table(by_name, "mpc.forecast")) {
        if (static_cast<int>(fc->rows.size()) != T)
            parse_error(fc->line, "mpc.forecast has " + std::to_string(fc->rows.size()) + " rows, expected " +
                                      std::to_string(T));
        if (!fc->rows.empty() && static_cast<int>(fc->rows.front().size()) != K)
            parse_error(fc->line, "mpc.forecast needs one column per renewable");
        for (int t = 0; t < T; ++t)
            for (int k = 0; k < K; ++k) g.forecast(k, t) = fc->rows[t][k];
    } else {
        for (int k = 0; k < K; ++k)
            g.forecast.row(k).setConstant(0.5 * (g.renewables[k].w_min + g.renewables[k].w_max));
    }

    if (const Table* init = find_table(by_name, "mpc.initial")) {
        g.initial_dispatch = flatten(*init);
        if (g.initial_dispatch.size() != g.generators.size())
            parse_error(init->line, "mpc.initial needs one entry per in-service generator");
    }

    g.validate();
    g.shift_factors = compute_shift_factors(g);
    return g;
}

GridCase read_case_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open case file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    GridCase g = parse_case(ss.str());
    if (g.name.empty()) g.name = path.stem().string();
    return g;
}

// ---------------------------------------------------------------- serialize

std::string serialize_case(const GridCase& g) {
    std::ostringstream o;
    const int N = g.num_buses(), T = g.periods(), K = g.num_renewables();
    o << "function mpc = " << (g.name.empty() ? "case" : g.name) << "\n";
    o << "mpc.version = '2';\n";
    o << "mpc.name = '" << g.name << "';\n";
    o << "mpc.baseMVA = " << fmt(g.base_mva) << ";\n\n";
    o << "%% T  dispatch_minutes  response_minutes\n";
    o << "mpc.time = [" << T << " " << fmt(g.time.dispatch_minutes) << " " << fmt(g.time.response_minutes)
      << "];\n\n";

    o << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
    o << "mpc.bus = [\n";
    for (const auto& b : g.buses)
        o << "\t" << b.id << "\t" << (b.slack ? 3 : 1) << "\t" << fmt(b.base_load)
          << "\t0\t0\t0\t1\t1\t0\t0\t1\t1.06\t0.94;\n";
    o << "];\n\n";

    o << "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin Pc1 Pc2 Qc1min Qc1max Qc2min Qc2max "
         "ramp_agc ramp_10 ramp_30 ramp_q apf\n";
    o << "mpc.gen = [\n";
    for (const auto& u : g.generators) {
        const double ramp = std::isinf(u.ramp_up) ? 0.0 : u.ramp_up;
        o << "\t" << g.buses[u.bus].id << "\t0\t0\t0\t0\t1\t" << fmt(g.base_mva) << "\t1\t" << fmt(u.p_max) << "\t"
          << fmt(u.p_min) << "\t0\t0\t0\t0\t0\t0\t" << fmt(ramp) << "\t0\t0\t0\t" << (u.agc ? 1 : 0) << ";\n";
    }
    o << "];\n\n";
    o << "%% ramp_up ramp_down (MW/min)\n";
    o << "mpc.ramp = [\n";
    for (const auto& u : g.generators) o << "\t" << fmt(u.ramp_up) << "\t" << fmt(u.ramp_down) << ";\n";
    o << "];\n\n";

    o << "%% fbus tbus r x b rateA rateB rateC ratio angle status\n";
    o << "mpc.branch = [\n";
    for (const auto& l : g.lines)
        o << "\t" << g.buses[l.from].id << "\t" << g.buses[l.to].id << "\t0\t" << fmt(l.reactance) << "\t0\t"
          << (std::isinf(l.capacity) ? std::string("0") : fmt(l.capacity)) << "\t0\t0\t0\t0\t1;\n";
    o << "];\n\n";

    // Piecewise rows are longer than polynomial rows; pad to a common width.
    std::size_t width = 7;
    for (const auto& u : g.generators)
        if (u.cost.kind == CostCurve::Kind::PiecewiseLinear) width = std::max(width, 4 + 2 * u.cost.points.size());
    o << "%% model startup shutdown n c(n-1) ... c0\n";
    o << "mpc.gencost = [\n";
    for (const auto& u : g.generators) {
        std::vector<double> row;
        const auto& c = u.cost;
        switch (c.kind) {
            case CostCurve::Kind::Quadratic: row = {2, 0, 0, 3, c.c2, c.c1, c.c0}; break;
            case CostCurve::Kind::Linear: row = {2, 0, 0, 2, c.c1, c.c0}; break;
            case CostCurve::Kind::PiecewiseLinear:
                row = {1, 0, 0, static_cast<double>(c.points.size())};
                for (const auto& [x, y] : c.points) {
                    row.push_back(x);
                    row.push_back(y);
                }
                break;
        }
        row.resize(width, 0.0);
        o << "\t";
        for (std::size_t j = 0; j < row.size(); ++j) o << (j ? "\t" : "") << fmt(row[j]);
        o << ";\n";
    }
    o << "];\n\n";

    o << "%% bus w_min w_max\n";
    o << "mpc.renewables = [\n";
    for (const auto& w : g.renewables)
        o << "\t" << g.buses[w.bus].id << "\t" << fmt(w.w_min) << "\t" << fmt(w.w_max) << ";\n";
    o << "];\n\n";

    o << "%% one row per period, one column per bus (MW)\n";
    o << "mpc.load = [\n";
    for (int t = 0; t < T; ++t) {
        o << "\t";
        for (int n = 0; n < N; ++n) o << (n ? "\t" : "") << fmt(g.load(n, t));
        o << ";\n";
    }
    o << "];\n\n";

    if (K > 0) {
        o << "%% one row per period, one column per renewable (MW)\n";
        o << "mpc.forecast = [\n";
        for (int t = 0; t < T; ++t) {
            o << "\t";
            for (int k = 0; k < K; ++k) o << (k ? "\t" : "") << fmt(g.forecast(k, t));
            o << ";\n";
        }
        o << "];\n";
    }
    if (!g.initial_dispatch.empty()) {
        o << "\nmpc.initial = [";
        for (std::size_t i = 0; i < g.initial_dispatch.size(); ++i) o << (i ? " " : "") << fmt(g.initial_dispatch[i]);
        o << "];\n";
    }
    return o.str();
}

// ---------------------------------------------------------------- shift factors

Eigen::MatrixXd compute_shift_factors(const GridCase& g) {
    const int N = g.num_buses(), L = g.num_lines();
    const int slack = g.slack_bus();
    if (slack < 0) data_error("missing slack bus");
    for (int l = 0; l < L; ++l)
        if (!(g.lines[l].reactance > 0.0))
            data_error("line[" + std::to_string(l) + "].reactance must be positive");

    std::vector<std::vector<int>> adj(N);
    for (const auto& ln : g.lines) {
        adj[ln.from].push_back(ln.to);
        adj[ln.to].push_back(ln.from);
    }
    std::vector<char> seen(N, 0);
    std::queue<int> q;
    q.push(slack);
    seen[slack] = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                q.push(v);
            }
    }
    for (int n = 0; n < N; ++n)
        if (!seen[n]) data_error("disconnected network: bus " + std::to_string(g.buses[n].id) + " unreachable");

    // reduced susceptance matrix, slack removed
    std::vector<int> pos(N, -1);
    int m = 0;
    for (int n = 0; n < N; ++n)
        if (n != slack) pos[n] = m++;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    for (const auto& ln : g.lines) {
        const double b = 1.0 / ln.reactance;
        const int f = pos[ln.from], t = pos[ln.to];
        if (f >= 0) B(f, f) += b;
        if (t >= 0) B(t, t) += b;
        if (f >= 0 && t >= 0) {
            B(f, t) -= b;
            B(t, f) -= b;
        }
    }
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, N);
    if (m > 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(B);
        const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12 * dmax)
            data_error("singular susceptance matrix");
        const Eigen::MatrixXd Xr = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
        for (int a = 0; a < N; ++a)
            for (int b = 0; b < N; ++b)
                if (pos[a] >= 0 && pos[b] >= 0) X(a, b) = Xr(pos[a], pos[b]);
    }
    // flow_l = (theta_from - theta_to) / x_l, theta = X * injection
    Eigen::MatrixXd F(N, L);
    for (int l = 0; l < L; ++l) {
        const auto& ln = g.lines[l];
        F.col(l) = (X.row(ln.from) - X.row(ln.to)).transpose() / ln.reactance;
    }
    F.row(slack).setZero();
    return F;
}

// ---------------------------------------------------------------- series

Series load_series(std::string_view text) {
    Series s;
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    bool header = false;
    bool skip_first = false;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        std::vector<std::string_view> cells;
        std::size_t a = 0;
        while (true) {
            const std::size_t b = line.find(',', a);
            cells.push_back(line.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a));
            if (b == std::string_view::npos) break;
            a = b + 1;
        }
        if (!header) {
            header = true;
            for (auto c : cells) {
                std::string name(c);
                name.erase(0, name.find_first_not_of(" \t"));
                name.erase(name.find_last_not_of(" \t") + 1);
                s.columns.push_back(name);
            }
            std::string first = s.columns.front();
            std::transform(first.begin(), first.end(), first.begin(), ::tolower);
            if (first == "t" || first == "period") {
                skip_first = true;
                s.columns.erase(s.columns.begin());
            }
        } else {
            const std::size_t expect = s.columns.size() + (skip_first ? 1 : 0);
            if (cells.size() != expect)
                parse_error(line_no, "ragged row: " + std::to_string(cells.size()) + " cells, header has " +
                                         std::to_string(expect));
            std::vector<double> row;
            for (std::size_t j = skip_first ? 1 : 0; j < cells.size(); ++j) {
                const auto v = to_number(cells[j]);
                if (!v) parse_error(line_no, "non-numeric cell '" + std::string(cells[j]) + "'");
                row.push_back(*v);
            }
            rows.push_back(std::move(row));
        }
        if (end == text.size()) break;
    }
    if (!header) throw Error(ErrorKind::Parse, "series has no header row");
    s.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(s.columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) s.values(r, c) = rows[r][c];
    return s;
}

Series read_series_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open series file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return load_series(ss.str());
}

std::string format_series(const Series& s, int precision) {
    std::ostringstream o;
    o.precision(precision);
    o << "t";
    for (const auto& c : s.columns) o << "," << c;
    o << "\n";
    for (Eigen::Index r = 0; r < s.values.rows(); ++r) {
        o << r + 1;
        for (Eigen::Index c = 0; c < s.values.cols(); ++c) o << "," << s.values(r, c);
        o << "\n";
    }
    return o.str();
}

namespace {

void check_periods(const GridCase& g, const Series& s, const char* what) {
    if (s.periods() != g.periods())
        data_error(std::string(what) + ": period count mismatch, series has " + std::to_string(s.periods()) +
                   " rows, case has " + std::to_string(g.periods()) + " periods");
}

}  // namespace

void attach_forecast(GridCase& g, const Series& s) {
    check_periods(g, s, "forecast");
    if (s.values.cols() != g.num_renewables())
        data_error("forecast: series has " + std::to_string(s.values.cols()) + " columns, case has " +
                   std::to_string(g.num_renewables()) + " renewables");
    g.forecast = s.values.transpose();
    g.validate();
}

void attach_load(GridCase& g, const Series& s) {
    check_periods(g, s, "load");
    const int N = g.num_buses();
    if (s.values.cols() != N)
        data_error("load: series has " + std::to_string(s.values.cols()) + " columns, case has " +
                   std::to_string(N) + " buses");
    std::vector<int> target(N);
    bool by_id = true;
    for (int c = 0; c < N && by_id; ++c) {
        const auto v = to_number(s.columns[c]);
        if (!v || *v != std::floor(*v)) {
            by_id = false;
            break;
        }
        const int id = static_cast<int>(*v);
        auto it = std::find_if(g.buses.begin(), g.buses.end(), [id](const Bus& b) { return b.id == id; });
        if (it == g.buses.end()) data_error("load: column '" + s.columns[c] + "' names no bus");
        target[c] = static_cast<int>(it - g.buses.begin());
    }
    if (!by_id)
        for (int c = 0; c < N; ++c) target[c] = c;
    Eigen::MatrixXd load(N, g.periods());
    for (int c = 0; c < N; ++c) load.row(target[c]) = s.values.col(c).transpose();
    g.load = load;
    g.validate();
}

void scale_loads(GridCase& g, double factor) {
    if (!(factor >= 0.0) || !std::isfinite(factor)) data_error("load scale must be finite and >= 0");
    g.load *= factor;
    for (auto& b : g.buses) b.base_load *= factor;
}

void set_ramp_fraction(GridCase& g, double fraction) {
    if (!(fraction > 0.0)) data_error("ramp fraction must be positive");
    for (auto& u : g.generators) u.ramp_up = u.ramp_down = fraction * u.p_max;
}

}  // namespace dne
