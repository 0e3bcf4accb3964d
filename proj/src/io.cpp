#include "blochkit/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "blochkit/catalog.hpp"
#include "blochkit/errors.hpp"

namespace blochkit::io {

namespace {

[[noreturn]] void schema_error(const std::string& what) { throw InvalidArgument("schema: " + what); }

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) schema_error(where + " needs \"" + key + "\"");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) schema_error(where + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema_error(where + " must be finite");
    return v;
}

int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) schema_error(where + " must be an integer");
    return j.get<int>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

int integer_or(const json& j, const char* key, int fallback, const std::string& where) {
    return j.contains(key) ? integer(j.at(key), where + "." + key) : fallback;
}

std::vector<double> number_list(const json& j, const std::string& where) {
    if (!j.is_array()) schema_error(where + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(number(v, where));
    return out;
}

std::vector<int> integer_list(const json& j, const std::string& where) {
    if (!j.is_array()) schema_error(where + " must be an array");
    std::vector<int> out;
    for (const auto& v : j) out.push_back(integer(v, where));
    return out;
}

std::vector<cplx> complex_list(const json& j, const std::string& where) {
    if (!j.is_array()) schema_error(where + " must be an array");
    std::vector<cplx> out;
    for (const auto& v : j) out.push_back(complex_from_json(v));
    return out;
}

Term term_from_json(const json& j) {
    const std::string type = require(j, "type", "term").get<std::string>();
    if (type == "polynomial") {
        return PolynomialTerm{complex_list(require(j, "coefficients", "polynomial term"), "coefficients")};
    }
    if (type == "rational") {
        return RationalTerm{complex_from_json(require(j, "alpha", "rational term")),
                            number(require(j, "pole", "rational term"), "pole"),
                            complex_from_json(require(j, "delta", "rational term"))};
    }
    if (type == "exp_trig") {
        return ExpTrigTerm{complex_from_json(require(j, "amplitude", "exp_trig term")),
                           j.contains("rate") ? complex_from_json(j.at("rate")) : cplx(0.0),
                           number_or(j, "omega", 0.0, "exp_trig term"), number_or(j, "phase", 0.0, "exp_trig term")};
    }
    schema_error("unknown term type \"" + type + "\"");
}

json term_to_json(const Term& t) {
    json out;
    if (const auto* p = std::get_if<PolynomialTerm>(&t)) {
        out["type"] = "polynomial";
        out["coefficients"] = json::array();
        for (cplx c : p->coefficients) out["coefficients"].push_back(to_json(c));
    } else if (const auto* r = std::get_if<RationalTerm>(&t)) {
        out["type"] = "rational";
        out["alpha"] = to_json(r->alpha);
        out["pole"] = r->pole;
        out["delta"] = to_json(r->delta);
    } else {
        const auto& e = std::get<ExpTrigTerm>(t);
        out["type"] = "exp_trig";
        out["amplitude"] = to_json(e.amplitude);
        out["rate"] = to_json(e.rate);
        out["omega"] = e.omega;
        out["phase"] = e.phase;
    }
    return out;
}

PeriodicCoefficient catalog_coefficient(const json& j) {
    const std::string name = require(j, "name", "catalog coefficient").get<std::string>();
    const json params = j.value("params", json::object());
    PeriodicCoefficient c = [&] {
        if (name == "mathieu") return catalog::mathieu_potential(number_or(params, "q", 1.0, "params"));
        if (name == "kronig_penney") {
            return catalog::kronig_penney_potential(number_or(params, "v0", 10.0, "params"),
                                                    number_or(params, "width", 0.3, "params"),
                                                    number_or(params, "period", 1.0, "params"));
        }
        if (name == "intro") return catalog::intro_potential();
        schema_error("unknown catalog coefficient \"" + name + "\"");
    }();
    if (j.contains("period") && std::abs(number(j.at("period"), "period") - c.period()) > 1e-12 * c.period()) {
        schema_error("catalog coefficient \"" + name + "\" has a different period");
    }
    return c;
}

std::string csv_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

cplx complex_from_json(const json& j) {
    if (j.is_number()) return number(j, "complex value");
    if (j.is_array() && j.size() == 2) return {number(j[0], "real part"), number(j[1], "imaginary part")};
    schema_error("complex values are numbers or [re, im] pairs");
}

json to_json(cplx z) { return json::array({z.real() + 0.0, z.imag() + 0.0}); }

PeriodicCoefficient coefficient_from_json(const json& j) {
    try {
        const std::string kind = require(j, "kind", "coefficient").get<std::string>();
        if (kind == "catalog") return catalog_coefficient(j);
        const double period = number(require(j, "period", "coefficient"), "period");
        if (kind == "constant") return PeriodicCoefficient::constant(period, complex_from_json(require(j, "value", "constant")));
        if (kind == "fourier") {
            return PeriodicCoefficient::fourier(period, complex_list(require(j, "coefficients", "fourier"), "coefficients"));
        }
        if (kind == "piecewise") {
            const auto breaks = number_list(require(j, "breakpoints", "piecewise"), "breakpoints");
            const json& segs = require(j, "segments", "piecewise");
            if (!segs.is_array()) schema_error("segments must be an array");
            std::vector<Segment> segments;
            for (const auto& s : segs) {
                Segment seg;
                for (const auto& t : require(s, "terms", "segment")) seg.terms.push_back(term_from_json(t));
                segments.push_back(std::move(seg));
            }
            return PeriodicCoefficient::piecewise(period, breaks, std::move(segments));
        }
        schema_error("unknown coefficient kind \"" + kind + "\"");
    } catch (const json::exception& e) {
        schema_error(e.what());
    }
}

json to_json(const PeriodicCoefficient& c) {
    json out;
    out["period"] = c.period();
    switch (c.kind()) {
        case PeriodicCoefficient::Kind::Constant:
            out["kind"] = "constant";
            out["value"] = to_json(c.constant_value());
            break;
        case PeriodicCoefficient::Kind::Fourier:
            out["kind"] = "fourier";
            out["coefficients"] = json::array();
            for (cplx z : c.fourier_coefficients()) out["coefficients"].push_back(to_json(z));
            break;
        case PeriodicCoefficient::Kind::Piecewise:
            out["kind"] = "piecewise";
            out["breakpoints"] = c.breakpoints();
            out["segments"] = json::array();
            for (const auto& s : c.segments()) {
                json terms = json::array();
                for (const auto& t : s.terms) terms.push_back(term_to_json(t));
                out["segments"].push_back({{"terms", terms}});
            }
            break;
    }
    return out;
}

LatticeND lattice_from_json(const json& j) {
    if (j.contains("period")) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = number(j.at("period"), "lattice.period");
        return LatticeND(m);
    }
    const json& rows = require(j, "vectors", "lattice");
    if (!rows.is_array() || rows.empty()) schema_error("lattice.vectors must be a non-empty array");
    const auto d = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto row = number_list(rows[static_cast<std::size_t>(i)], "lattice.vectors");
        if (static_cast<Eigen::Index>(row.size()) != d) schema_error("lattice.vectors must be square");
        for (Eigen::Index k = 0; k < d; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
    }
    return LatticeND(m);
}

json to_json(const LatticeND& lattice) {
    if (lattice.dimension() == 1) return {{"period", lattice.primitive()(0, 0)}};
    json rows = json::array();
    for (int i = 0; i < lattice.dimension(); ++i) {
        json row = json::array();
        for (int k = 0; k < lattice.dimension(); ++k) row.push_back(lattice.primitive()(i, k));
        rows.push_back(row);
    }
    return {{"vectors", rows}};
}

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::OneD: return "1d";
        case Mode::ND: return "nd";
        case Mode::Transform: return "transform";
    }
    return "?";
}

namespace {

AnalysisParams analysis_from_json(const json& j) {
    AnalysisParams a;
    const std::string w = "analysis";
    a.floquet.propagation.rtol = number_or(j, "rtol", a.floquet.propagation.rtol, w);
    a.floquet.propagation.atol = number_or(j, "atol", a.floquet.propagation.atol, w);
    a.floquet.tau_eig = number_or(j, "tau_eig", a.floquet.tau_eig, w);
    a.floquet.tau_scalar = number_or(j, "tau_scalar", a.floquet.tau_scalar, w);
    a.floquet.grid_points = integer_or(j, "grid", a.floquet.grid_points, w);
    if (j.contains("lambda")) a.lambda = number(j.at("lambda"), "analysis.lambda");
    if (j.contains("lambda_range")) {
        const auto r = number_list(j.at("lambda_range"), "analysis.lambda_range");
        if (r.size() != 2 || !(r[0] < r[1])) schema_error("analysis.lambda_range must be [lo, hi] with lo < hi");
        a.lambda_range = std::make_pair(r[0], r[1]);
    }
    a.coarse_n = integer_or(j, "coarse_n", a.coarse_n, w);
    a.k_points = integer_or(j, "k_points", a.k_points, w);
    a.mpw = integer_or(j, "mpw", a.mpw, w);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) schema_error("analysis.seed must be a non-negative integer");
        a.seed = j.at("seed").get<std::uint64_t>();
    }
    return a;
}

ProbeBox box_from_json(const json& j, int d) {
    ProbeBox box{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
    if (j.is_null()) return box;
    const auto lo = number_list(require(j, "lower", "probe_box"), "probe_box.lower");
    const auto hi = number_list(require(j, "upper", "probe_box"), "probe_box.upper");
    if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d) schema_error("probe_box has the wrong dimension");
    for (int i = 0; i < d; ++i) {
        box.lower(i) = lo[static_cast<std::size_t>(i)];
        box.upper(i) = hi[static_cast<std::size_t>(i)];
    }
    return box;
}

NdSpec nd_from_json(const json& j) {
    const json& body = require(j, "nd", "nd problem");
    NdSpec s{lattice_from_json(require(j, "lattice", "nd problem"))};
    const int d = s.lattice.dimension();
    s.laplacian_scale = number_or(body, "laplacian_scale", 1.0, "nd");
    for (const auto& c : require(body, "potentials", "nd")) s.potentials.push_back(coefficient_from_json(c));
    s.lambdas = number_list(require(body, "lambdas", "nd"), "nd.lambdas");
    if (static_cast<int>(s.potentials.size()) != d || static_cast<int>(s.lambdas.size()) != d) {
        schema_error("nd needs one potential and one lambda per dimension");
    }
    if (body.contains("weights")) {
        for (const auto& w : body.at("weights")) {
            const auto pair = complex_list(w, "nd.weights");
            if (pair.size() != 2) schema_error("nd.weights entries are pairs");
            s.weights.push_back({pair[0], pair[1]});
        }
        if (static_cast<int>(s.weights.size()) != d) schema_error("nd.weights needs one pair per dimension");
    } else {
        s.weights.assign(static_cast<std::size_t>(d), {cplx(1.0), cplx(1.0)});
    }
    const std::string mode = body.value("mode", std::string("orthogonal-sum"));
    if (mode == "orthogonal-sum") {
        s.mode = PotentialMode::OrthogonalSum;
    } else if (mode == "verify-only") {
        s.mode = PotentialMode::VerifyOnly;
        s.constant_potential = complex_from_json(require(body, "potential", "verify-only nd"));
        s.energy = number(require(body, "energy", "verify-only nd"), "nd.energy");
    } else {
        schema_error("unknown nd mode \"" + mode + "\"");
    }
    s.box = box_from_json(body.value("probe_box", json()), d);
    s.grid = integer_or(body, "grid", s.grid, "nd");
    s.export_points = integer_or(body, "export_points", s.export_points, "nd");
    return s;
}

TransformSpec transform_from_json(const json& j) {
    const json& body = require(j, "transform", "transform problem");
    TransformSpec s{lattice_from_json(require(j, "lattice", "transform problem"))};
    const int d = s.lattice.dimension();
    s.points_per_cell = integer_or(body, "points_per_cell", s.points_per_cell, "transform");
    s.cell_lo = integer_list(require(body, "cell_lo", "transform"), "transform.cell_lo");
    s.cell_hi = integer_list(require(body, "cell_hi", "transform"), "transform.cell_hi");
    if (static_cast<int>(s.cell_lo.size()) != d || static_cast<int>(s.cell_hi.size()) != d) {
        schema_error("transform cell bounds have the wrong dimension");
    }
    const json& f = require(body, "function", "transform");
    s.function = require(f, "kind", "transform.function").get<std::string>();
    if (s.function == "gaussian") {
        s.sigma = number(require(f, "sigma", "gaussian"), "sigma");
        s.center = Eigen::VectorXd::Zero(d);
        if (f.contains("center")) {
            const auto c = number_list(f.at("center"), "center");
            if (static_cast<int>(c.size()) != d) schema_error("gaussian center has the wrong dimension");
            for (int i = 0; i < d; ++i) s.center(i) = c[static_cast<std::size_t>(i)];
        }
    } else if (s.function == "samples") {
        s.samples = complex_list(require(f, "values", "samples"), "values");
    } else {
        schema_error("unknown transform function \"" + s.function + "\"");
    }
    s.k_per_dim = integer_or(body, "k_per_dim", s.k_per_dim, "transform");
    s.shells = integer_or(body, "shells", s.shells, "transform");
    s.quadrature = integer_or(body, "quadrature", s.k_per_dim, "transform");
    return s;
}

}  // namespace

ProblemFile parse_problem(const json& j) {
    try {
        ProblemFile f;
        if (!j.is_object()) schema_error("problem file must be an object");
        f.version = require(j, "version", "problem file").get<std::string>();
        if (f.version != kSchemaVersion) schema_error("unsupported version \"" + f.version + "\"");
        const std::string mode = j.value("mode", std::string("1d"));
        f.analysis = analysis_from_json(j.value("analysis", json::object()));
        if (mode == "1d") {
            f.mode = Mode::OneD;
            if (j.contains("catalog")) {
                f.catalog_name = j.at("catalog").get<std::string>();
                f.problem = catalog::find(f.catalog_name).problem;
            } else {
                const LatticeND lat = lattice_from_json(require(j, "lattice", "1d problem"));
                if (lat.dimension() != 1) schema_error("1d problems need a one-dimensional lattice");
                const double gamma = lat.primitive()(0, 0);
                const auto V = coefficient_from_json(require(j, "V", "1d problem"));
                const auto W = j.contains("W") ? coefficient_from_json(j.at("W")) : PeriodicCoefficient::constant(gamma, 0.0);
                f.problem = Problem1D(Lattice1D(gamma), W, V);
            }
        } else if (mode == "nd") {
            f.mode = Mode::ND;
            f.nd = nd_from_json(j);
        } else if (mode == "transform") {
            f.mode = Mode::Transform;
            f.transform = transform_from_json(j);
        } else {
            schema_error("unknown mode \"" + mode + "\"");
        }
        return f;
    } catch (const json::exception& e) {
        schema_error(e.what());
    }
}

ProblemFile load_problem(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
    return parse_problem(j);
}

ProblemFile catalog_problem(const std::string& name) {
    ProblemFile f;
    f.catalog_name = name;
    f.problem = catalog::find(name).problem;
    return f;
}

SeparableProblem separable_problem(const NdSpec& spec) {
    std::vector<Problem1D> dirs;
    for (int j = 0; j < spec.lattice.dimension(); ++j) {
        const auto& U = spec.potentials[static_cast<std::size_t>(j)];
        dirs.emplace_back(Lattice1D(spec.lattice.length(j)), U);
    }
    SeparableProblem sp{spec.lattice, spec.laplacian_scale, std::move(dirs), spec.mode, {}};
    if (spec.mode == PotentialMode::VerifyOnly) {
        const cplx v0 = spec.constant_potential;
        sp.potential = [v0](const Eigen::VectorXd&) { return v0; };
    }
    sp.validate();
    return sp;
}

SampledFunction sampled_function(const TransformSpec& spec) {
    if (spec.function == "gaussian") {
        const Eigen::VectorXd c = spec.center;
        const double s2 = 2.0 * spec.sigma * spec.sigma;
        return sample_function(spec.lattice, spec.points_per_cell, spec.cell_lo, spec.cell_hi,
                               [&](const Eigen::VectorXd& r) { return cplx(std::exp(-(r - c).squaredNorm() / s2)); });
    }
    SampledFunction f = sample_function(spec.lattice, spec.points_per_cell, spec.cell_lo, spec.cell_hi,
                                        [](const Eigen::VectorXd&) { return cplx(0.0); });
    if (spec.samples.size() != f.size()) {
        throw InvalidArgument("transform samples: expected " + std::to_string(f.size()) + " values, got " +
                              std::to_string(spec.samples.size()));
    }
    f.values = spec.samples;
    return f;
}

json to_json(const CongruenceClass& k) { return to_json(k.representative); }

json to_json(const CheckResult& r) {
    json out{{"outcome", to_string(r.outcome)}, {"deviation", r.deviation}, {"bound", r.bound}};
    if (!r.detail.empty()) out["detail"] = r.detail;
    return out;
}

json to_json(const ResidualReport& r) {
    json out{{"parts", r.parts}, {"max", r.max()}, {"evaluated_points", r.evaluated_points}};
    if (r.coupled) out["coupled"] = *r.coupled;
    return out;
}

json to_json(const ZeroReport& r) {
    json out{{"outcome", to_string(r.outcome)}, {"zero_found", r.zero_found}, {"min_abs", r.min_abs},
             {"class_ok", r.class_ok}, {"phase_deviation", r.phase_deviation}};
    if (r.zero_found) out["zero_location"] = r.zero_location;
    if (r.quotient_deviation) out["quotient_deviation"] = *r.quotient_deviation;
    if (!r.detail.empty()) out["detail"] = r.detail;
    return out;
}

json to_json(const Classification& c) {
    const auto& d = c.data;
    json out;
    out["lambda"] = c.map.lambda;
    out["sigma_tag"] = to_string(c.map.sigma_tag);
    out["classes"] = json::array();
    for (const auto& k : c.map.classes) out["classes"].push_back(to_json(k));
    out["multipliers"] = json::array({to_json(d.multipliers[0]), to_json(d.multipliers[1])});
    out["jordan"] = to_string(d.jordan);
    out["near_degenerate"] = d.near_degenerate;
    json M = json::array();
    for (int i = 0; i < 2; ++i) M.push_back(json::array({to_json(d.monodromy.M(i, 0)), to_json(d.monodromy.M(i, 1))}));
    out["monodromy"] = M;
    out["monodromy_error_estimate"] = d.monodromy.error_estimate;
    out["log_residual"] = d.log_residual;
    out["log_condition"] = d.log.condition;
    if (c.form) {
        out["form"] = c.form->form_number();
        out["periodicity_deviation"] = c.form->periodicity_deviation;
        out["transfer_periodicity"] = c.form->transfer_periodicity;
    }
    return out;
}

json to_json(const BandStructure& bands) {
    json out{{"lambda_min", bands.lambda_min}, {"lambda_max", bands.lambda_max}, {"coarse_n", bands.coarse_n}};
    out["bands"] = json::array();
    for (const auto& b : bands.bands) {
        out["bands"].push_back({{"index", b.index},
                                {"lambda_lo", b.lo},
                                {"lambda_hi", b.hi},
                                {"edge_kind_lo", to_string(b.lo_kind)},
                                {"edge_kind_hi", to_string(b.hi_kind)},
                                {"touching_lo", b.touching_lo},
                                {"touching_hi", b.touching_hi}});
    }
    out["spectral_set"] = json::array();
    for (const auto& s : bands.spectral_set) {
        out["spectral_set"].push_back({{"lambda_lo", s.lo},
                                       {"lambda_hi", s.hi},
                                       {"edge_kind_lo", to_string(s.lo_kind)},
                                       {"edge_kind_hi", to_string(s.hi_kind)},
                                       {"touching_points", s.touching_points}});
    }
    return out;
}

json to_json(const UnionReport& u) {
    auto pairs = [](const std::vector<std::pair<double, double>>& v) {
        json a = json::array();
        for (const auto& [lo, hi] : v) a.push_back(json::array({lo, hi}));
        return a;
    };
    json out{{"k_points", u.k_points}, {"M_pw", u.M_pw}, {"lambda_max", u.lambda_max},
             {"count_match", u.count_match}};
    out["max_discrepancy"] = std::isfinite(u.max_discrepancy) ? json(u.max_discrepancy) : json("inf");
    out["planewave_bands"] = pairs(u.planewave_bands);
    out["ode_bands"] = pairs(u.ode_bands);
    return out;
}

json to_json(const TransformProperties& p) {
    return {{"quasi_periodicity", p.quasi_periodicity}, {"k_periodicity", p.k_periodicity}, {"max_abs", p.max_abs}};
}

std::string bands_csv(const BandStructure& bands, const std::vector<double>& discrepancy) {
    std::ostringstream out;
    out << "lambda_lo,lambda_hi,edge_kind_lo,edge_kind_hi,touching";
    if (!discrepancy.empty()) out << ",discrepancy";
    out << '\n';
    for (std::size_t i = 0; i < bands.spectral_set.size(); ++i) {
        const auto& s = bands.spectral_set[i];
        out << format_double(s.lo) << ',' << format_double(s.hi) << ',' << to_string(s.lo_kind) << ','
            << to_string(s.hi_kind) << ',' << csv_bool(!s.touching_points.empty());
        if (!discrepancy.empty()) out << ',' << format_double(i < discrepancy.size() ? discrepancy[i] : NAN);
        out << '\n';
    }
    return out.str();
}

std::string dispersion_csv(const std::vector<FiberEigenvalues>& fibers, int bands) {
    std::ostringstream out;
    out << 'k';
    for (int j = 1; j <= bands; ++j) out << ",lambda_" << j;
    out << '\n';
    for (const auto& f : fibers) {
        out << format_double(f.k);
        for (int j = 0; j < bands && j < static_cast<int>(f.eigenvalues.size()); ++j) {
            out << ',' << format_double(f.eigenvalues[static_cast<std::size_t>(j)]);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace blochkit::io
