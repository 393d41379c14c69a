#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "dne/conic.hpp"
#include "dne/error.hpp"

namespace dne {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Data: return "data";
        case ErrorKind::Config: return "config";
        case ErrorKind::Infeasible: return "infeasible";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::Capability: return "capability";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace dne

namespace dne::conic {

LinearExpr& LinearExpr::add(const LinearExpr& other, double scale) {
    for (std::size_t k = 0; k < other.index.size(); ++k) add(other.index[k], scale * other.coef[k]);
    constant += scale * other.constant;
    return *this;
}

double LinearExpr::evaluate(std::span<const double> x) const {
    double v = constant;
    for (std::size_t k = 0; k < index.size(); ++k) v += coef[k] * x[index[k]];
    return v;
}

void LinearExpr::compress() {
    std::map<int, double> merged;
    for (std::size_t k = 0; k < index.size(); ++k) merged[index[k]] += coef[k];
    index.clear();
    coef.clear();
    for (auto [i, c] : merged) {
        if (c != 0.0) {
            index.push_back(i);
            coef.push_back(c);
        }
    }
}

LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return std::move(a.add(b)); }
LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return std::move(a.add(b, -1.0)); }
LinearExpr operator*(double s, LinearExpr a) {
    for (auto& c : a.coef) c *= s;
    a.constant *= s;
    return a;
}

int ConicProgram::add_variable(double lo, double hi, std::string name) {
    lo_.push_back(lo);
    hi_.push_back(hi);
    objective_.push_back(0.0);
    names_.push_back(std::move(name));
    return num_vars() - 1;
}

int ConicProgram::add_variables(int n, double lo, double hi) {
    const int first = num_vars();
    for (int k = 0; k < n; ++k) add_variable(lo, hi);
    return first;
}

void ConicProgram::set_bounds(int var, double lo, double hi) {
    lo_.at(var) = lo;
    hi_.at(var) = hi;
}

void ConicProgram::set_objective(int var, double c) { objective_.at(var) = c; }
void ConicProgram::add_objective(int var, double c) { objective_.at(var) += c; }
void ConicProgram::add_objective(const LinearExpr& e) {
    for (std::size_t k = 0; k < e.index.size(); ++k) objective_.at(e.index[k]) += e.coef[k];
    objective_constant_ += e.constant;
}

void ConicProgram::add_equality(LinearExpr lhs, double rhs) {
    rhs -= lhs.constant;
    lhs.constant = 0.0;
    lhs.compress();
    equalities_.push_back({std::move(lhs), rhs});
}

void ConicProgram::add_inequality(LinearExpr lhs, double rhs) {
    rhs -= lhs.constant;
    lhs.constant = 0.0;
    lhs.compress();
    inequalities_.push_back({std::move(lhs), rhs});
}

void ConicProgram::add_soc(LinearExpr head, std::vector<LinearExpr> tail) {
    head.compress();
    for (auto& t : tail) t.compress();
    socs_.push_back({std::move(head), std::move(tail)});
}

void ConicProgram::add_soc(const std::vector<int>& idx) {
    if (idx.size() < 2) throw Error(ErrorKind::Data, "SOC index tuple needs length >= 2");
    std::vector<LinearExpr> tail;
    for (std::size_t k = 1; k < idx.size(); ++k) tail.push_back(LinearExpr::var(idx[k]));
    add_soc(LinearExpr::var(idx[0]), std::move(tail));
}

void ConicProgram::add_psd(int dim, std::vector<LinearExpr> lower) {
    for (auto& e : lower) e.compress();
    psds_.push_back({dim, std::move(lower)});
}

double ConicProgram::objective_value(std::span<const double> x) const {
    double v = objective_constant_;
    for (int j = 0; j < num_vars(); ++j) v += objective_[j] * x[j];
    return v;
}

void ConicProgram::check_expr(const LinearExpr& e) const {
    if (e.index.size() != e.coef.size())
        throw Error(ErrorKind::Data, "expression index/coef length mismatch");
    for (int i : e.index)
        if (i < 0 || i >= num_vars())
            throw Error(ErrorKind::Data, "variable index " + std::to_string(i) + " out of range");
}

void ConicProgram::validate() const {
    for (int j = 0; j < num_vars(); ++j)
        if (lo_[j] > hi_[j])
            throw Error(ErrorKind::Data, "variable " + std::to_string(j) + " has lo > hi");
    for (const auto& r : equalities_) check_expr(r.lhs);
    for (const auto& r : inequalities_) check_expr(r.lhs);
    for (const auto& s : socs_) {
        if (s.tail.empty()) throw Error(ErrorKind::Data, "SOC with empty tail");
        check_expr(s.head);
        for (const auto& t : s.tail) check_expr(t);
    }
    for (const auto& p : psds_) {
        if (p.dim < 1 || p.lower.size() != static_cast<std::size_t>(p.dim) * (p.dim + 1) / 2)
            throw Error(ErrorKind::Data, "PSD block has wrong entry count");
        for (const auto& e : p.lower) check_expr(e);
    }
}

const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::NumericalLimit: return "numerical-limit";
    }
    return "unknown";
}

std::shared_ptr<const Backend> default_backend() { return interior_point_backend(); }

Solution solve(const ConicProgram& program, const Settings& settings, const Backend* backend) {
    program.validate();
    auto fallback = default_backend();
    if (backend == nullptr) backend = fallback.get();
    if (!program.psds().empty() && !backend->supports_psd())
        throw Error(ErrorKind::Capability,
                    "backend '" + backend->name() + "' is SOC-only but the program has PSD blocks");

    const auto start = std::chrono::steady_clock::now();
    Solution sol = backend->solve(program, settings);
    sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (sol.optimal()) {
        if (sol.x.size() != static_cast<std::size_t>(program.num_vars())) {
            sol.status = Status::NumericalLimit;
            sol.message = "backend returned a primal vector of the wrong length";
            return sol;
        }
        sol.objective = program.objective_value(sol.x);
        auto report = verify(program, sol, settings.verify_tol);
        if (!report.passed) {
            sol.status = Status::NumericalLimit;
            sol.message = "verification failed: " + report.detail;
        }
    }
    return sol;
}

VerifyReport verify(const ConicProgram& program, std::span<const double> x, double tol) {
    VerifyReport rep;
    std::ostringstream detail;
    if (x.size() != static_cast<std::size_t>(program.num_vars())) {
        rep.detail = "primal length mismatch";
        return rep;
    }
    for (const auto& r : program.equalities())
        rep.max_equality_residual = std::max(rep.max_equality_residual, std::abs(r.lhs.evaluate(x) - r.rhs));
    for (const auto& r : program.inequalities())
        rep.max_inequality_violation = std::max(rep.max_inequality_violation, r.lhs.evaluate(x) - r.rhs);
    for (int j = 0; j < program.num_vars(); ++j) {
        rep.max_bound_violation = std::max(rep.max_bound_violation, program.lower_bounds()[j] - x[j]);
        rep.max_bound_violation = std::max(rep.max_bound_violation, x[j] - program.upper_bounds()[j]);
    }
    for (const auto& s : program.socs()) {
        double sq = 0.0;
        for (const auto& t : s.tail) {
            const double v = t.evaluate(x);
            sq += v * v;
        }
        rep.max_soc_violation = std::max(rep.max_soc_violation, std::sqrt(sq) - s.head.evaluate(x));
    }
    for (std::size_t b = 0; b < program.psds().size(); ++b) {
        const auto& p = program.psds()[b];
        Eigen::MatrixXd m(p.dim, p.dim);
        for (int i = 0; i < p.dim; ++i)
            for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = p.at(i, j).evaluate(x);
        const double ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .minCoeff();
        if (ev < rep.min_psd_eigenvalue) {
            rep.min_psd_eigenvalue = ev;
            rep.worst_psd_block = static_cast<int>(b);
        }
    }
    rep.max_inequality_violation = std::max(rep.max_inequality_violation, 0.0);
    rep.max_bound_violation = std::max(rep.max_bound_violation, 0.0);
    rep.max_soc_violation = std::max(rep.max_soc_violation, 0.0);

    rep.passed = true;
    auto check = [&](const char* what, double v) {
        if (!(v <= tol)) {
            rep.passed = false;
            detail << what << "=" << v << " ";
        }
    };
    check("equality", rep.max_equality_residual);
    check("inequality", rep.max_inequality_violation);
    check("bound", rep.max_bound_violation);
    check("soc", rep.max_soc_violation);
    if (rep.worst_psd_block >= 0 && !(rep.min_psd_eigenvalue >= -tol)) {
        rep.passed = false;
        detail << "psd block " << rep.worst_psd_block << " min eigenvalue=" << rep.min_psd_eigenvalue << " ";
    }
    for (double v : x)
        if (!std::isfinite(v)) {
            rep.passed = false;
            detail << "non-finite primal ";
            break;
        }
    rep.detail = detail.str();
    return rep;
}

namespace {

void write_expr(std::ostream& out, const LinearExpr& e) {
    out << e.index.size();
    for (std::size_t k = 0; k < e.index.size(); ++k) out << ' ' << e.index[k] << ' ' << e.coef[k];
    out << ' ' << e.constant << '\n';
}

LinearExpr read_expr(std::istream& in) {
    std::size_t n = 0;
    if (!(in >> n)) throw Error(ErrorKind::Parse, "conic dump: truncated expression");
    LinearExpr e;
    for (std::size_t k = 0; k < n; ++k) {
        int i = 0;
        double c = 0.0;
        in >> i >> c;
        e.index.push_back(i);
        e.coef.push_back(c);
    }
    in >> e.constant;
    if (!in) throw Error(ErrorKind::Parse, "conic dump: malformed expression");
    return e;
}

void expect(std::istream& in, const std::string& tag) {
    std::string word;
    in >> word;
    if (word != tag) throw Error(ErrorKind::Parse, "conic dump: expected '" + tag + "', got '" + word + "'");
}

}  // namespace

void dump(const ConicProgram& p, std::ostream& out) {
    out.precision(17);
    out << "conic-program 1\n";
    out << "vars " << p.num_vars() << '\n';
    for (int j = 0; j < p.num_vars(); ++j)
        out << p.lower_bounds()[j] << ' ' << p.upper_bounds()[j] << ' ' << p.objective()[j] << '\n';
    out << "objective-constant " << p.objective_constant() << '\n';
    out << "equalities " << p.equalities().size() << '\n';
    for (const auto& r : p.equalities()) {
        out << r.rhs << ' ';
        write_expr(out, r.lhs);
    }
    out << "inequalities " << p.inequalities().size() << '\n';
    for (const auto& r : p.inequalities()) {
        out << r.rhs << ' ';
        write_expr(out, r.lhs);
    }
    out << "socs " << p.socs().size() << '\n';
    for (const auto& s : p.socs()) {
        out << s.tail.size() << '\n';
        write_expr(out, s.head);
        for (const auto& t : s.tail) write_expr(out, t);
    }
    out << "psds " << p.psds().size() << '\n';
    for (const auto& s : p.psds()) {
        out << s.dim << '\n';
        for (const auto& e : s.lower) write_expr(out, e);
    }
    out << "end\n";
}

namespace {

double read_double(std::istream& in) {
    std::string tok;
    in >> tok;
    if (tok == "inf") return kInf;
    if (tok == "-inf") return -kInf;
    try {
        return std::stod(tok);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, "conic dump: bad number '" + tok + "'");
    }
}

}  // namespace

ConicProgram load(std::istream& in) {
    ConicProgram p;
    expect(in, "conic-program");
    int version = 0;
    in >> version;
    if (version != 1) throw Error(ErrorKind::Parse, "conic dump: unsupported version");
    expect(in, "vars");
    int n = 0;
    in >> n;
    for (int j = 0; j < n; ++j) {
        const double lo = read_double(in);
        const double hi = read_double(in);
        const double c = read_double(in);
        p.add_variable(lo, hi);
        p.set_objective(j, c);
    }
    expect(in, "objective-constant");
    p.add_objective(LinearExpr(read_double(in)));
    std::size_t count = 0;
    expect(in, "equalities");
    in >> count;
    for (std::size_t r = 0; r < count; ++r) {
        const double rhs = read_double(in);
        p.add_equality(read_expr(in), rhs);
    }
    expect(in, "inequalities");
    in >> count;
    for (std::size_t r = 0; r < count; ++r) {
        const double rhs = read_double(in);
        p.add_inequality(read_expr(in), rhs);
    }
    expect(in, "socs");
    in >> count;
    for (std::size_t r = 0; r < count; ++r) {
        std::size_t len = 0;
        in >> len;
        LinearExpr head = read_expr(in);
        std::vector<LinearExpr> tail;
        for (std::size_t k = 0; k < len; ++k) tail.push_back(read_expr(in));
        p.add_soc(std::move(head), std::move(tail));
    }
    expect(in, "psds");
    in >> count;
    for (std::size_t r = 0; r < count; ++r) {
        int dim = 0;
        in >> dim;
        std::vector<LinearExpr> lower;
        for (int k = 0; k < dim * (dim + 1) / 2; ++k) lower.push_back(read_expr(in));
        p.add_psd(dim, std::move(lower));
    }
    expect(in, "end");
    p.validate();
    return p;
}

}  // namespace dne::conic
