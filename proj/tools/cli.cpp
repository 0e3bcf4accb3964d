#include "blochkit/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "blochkit/catalog.hpp"
#include "blochkit/errors.hpp"
#include "blochkit/fixtures.hpp"
#include "blochkit/io.hpp"

namespace blochkit::cli {

namespace {

using io::json;

constexpr double kFormResidualBound = 1e-5;
constexpr double kUnionBound = 1e-5;
constexpr double kNdBound = 5e-5;
constexpr double kBlochRelationBound = 1e-7;
constexpr double kTransformBound = 1e-10;
constexpr double kParsevalBound = 1e-8;
constexpr double kP1Bound = 1e-9;

struct Options {
    std::optional<double> rtol;
    std::optional<double> atol;
    std::optional<double> tau_eig;
    std::optional<double> tau_scalar;
    std::optional<int> grid;
    std::optional<int> mpw;
    std::optional<std::uint64_t> seed;
    bool oracle = false;
    bool timings = false;
    std::string out;
    std::string format = "json";

    std::string file;
    std::string catalog_name;
    std::optional<double> lambda;
    std::vector<double> range;
    std::optional<int> coarse_n;
    std::optional<int> k_points;
    std::string dispersion;
    std::string suite = "all";
};

struct Input {
    io::ProblemFile problem;
    std::string raw;
};

Input load_input(const Options& o) {
    if (!o.file.empty() && !o.catalog_name.empty()) throw InvalidArgument("give a problem file or --catalog, not both");
    if (!o.catalog_name.empty()) return {io::catalog_problem(o.catalog_name), "catalog:" + o.catalog_name};
    if (o.file.empty()) throw InvalidArgument("a problem file or --catalog is required");
    std::ifstream in(o.file);
    if (!in) throw InvalidArgument("cannot open " + o.file);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string raw = ss.str();
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(o.file + ": " + e.what());
    }
    return {io::parse_problem(j), raw};
}

void apply_overrides(const Options& o, io::AnalysisParams& a) {
    if (o.rtol) a.floquet.propagation.rtol = *o.rtol;
    if (o.atol) a.floquet.propagation.atol = *o.atol;
    if (o.tau_eig) a.floquet.tau_eig = *o.tau_eig;
    if (o.tau_scalar) a.floquet.tau_scalar = *o.tau_scalar;
    if (o.grid) a.floquet.grid_points = *o.grid;
    if (o.mpw) a.mpw = *o.mpw;
    if (o.seed) a.seed = *o.seed;
    if (o.lambda) a.lambda = *o.lambda;
    if (o.range.size() == 2) {
        if (!(o.range[0] < o.range[1])) throw InvalidArgument("--range needs lo < hi");
        a.lambda_range = std::make_pair(o.range[0], o.range[1]);
    }
    if (o.coarse_n) a.coarse_n = *o.coarse_n;
    if (o.k_points) a.k_points = *o.k_points;
}

json params_json(const io::AnalysisParams& a) {
    json p{{"rtol", a.floquet.propagation.rtol},   {"atol", a.floquet.propagation.atol},
           {"tau_eig", a.floquet.tau_eig},        {"tau_scalar", a.floquet.tau_scalar},
           {"grid", a.floquet.grid_points},       {"coarse_n", a.coarse_n},
           {"k_points", a.k_points},              {"mpw", a.mpw},
           {"seed", a.seed}};
    if (a.lambda) p["lambda"] = *a.lambda;
    if (a.lambda_range) p["lambda_range"] = json::array({a.lambda_range->first, a.lambda_range->second});
    return p;
}

// FNV-1a, stable across platforms.
std::string fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

class Report {
public:
    Report(std::string command, const std::string& raw, const json& params) {
        body_["command"] = std::move(command);
        body_["version"] = io::kSchemaVersion;
        body_["inputs_hash"] = fnv1a(body_["command"].get<std::string>() + '\n' + raw + '\n' + params.dump());
        body_["parameters"] = params;
        body_["results"] = json::object();
        body_["checks"] = json::object();
    }

    json& results() { return body_["results"]; }

    void check(const std::string& name, const CheckResult& r) {
        body_["checks"][name] = io::to_json(r);
        failed_ = failed_ || r.outcome == Outcome::Fail;
    }

    void check(const std::string& name, double deviation, double bound, const std::string& detail = {}) {
        CheckResult r{name, deviation <= bound ? Outcome::Pass : Outcome::Fail, deviation, bound, detail};
        check(name, r);
    }

    void flag(const std::string& name, bool ok, const std::string& detail = {}) {
        check(name, CheckResult{name, ok ? Outcome::Pass : Outcome::Fail, 0.0, 0.0, detail});
    }

    void timing(const std::string& name, double seconds) { timings_[name] = seconds; }

    bool failed() const { return failed_; }

    json finish(bool with_timings) const {
        json out = body_;
        if (with_timings) out["timings"] = timings_;
        out["status"] = failed_ ? "fail" : "pass";
        return out;
    }

private:
    json body_;
    json timings_ = json::object();
    bool failed_ = false;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Export {
    std::string csv;
    json rows;
};

int emit(const Options& o, const Report& report, const std::optional<Export>& ex, std::ostream& out) {
    const json body = report.finish(o.timings);
    if (ex && !o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) throw InvalidArgument("cannot write " + o.out);
        if (o.format == "csv") {
            f << ex->csv;
        } else {
            f << ex->rows.dump(2) << '\n';
        }
        out << body.dump(2) << '\n';
    } else if (ex && o.format == "csv") {
        out << ex->csv;
    } else if (!o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) throw InvalidArgument("cannot write " + o.out);
        f << body.dump(2) << '\n';
    } else {
        out << body.dump(2) << '\n';
    }
    return report.failed() ? kCheckFailure : kPass;
}

const Problem1D& require_1d(const Input& in) {
    if (in.problem.mode != io::Mode::OneD || !in.problem.problem) throw InvalidArgument("this command needs a 1d problem");
    return *in.problem.problem;
}

bool all_real(const std::vector<CongruenceClass>& classes) {
    for (const auto& k : classes) {
        if (std::abs(k.representative.imag()) > 1e-9 * k.modulus) return false;
    }
    return true;
}

// Bounded exactly when every class is real and no Jordan block forces linear growth.
bool expected_bounded(const Classification& c) { return all_real(c.map.classes) && c.form->form_number() != 2; }

// ----------------------------------------------------------------------------- analyze

int cmd_analyze(const Options& o, std::ostream& out) {
    Input in = load_input(o);
    const Problem1D& p = require_1d(in);
    auto& a = in.problem.analysis;
    apply_overrides(o, a);
    if (!a.lambda) throw InvalidArgument("analyze needs --lambda or analysis.lambda");
    const double lambda = *a.lambda;

    Report report("analyze", in.raw, params_json(a));
    Stopwatch clock;
    const Classification c = classify(p, lambda, a.floquet);
    report.timing("classify", clock.seconds());

    json& res = report.results();
    res["classification"] = io::to_json(c);
    report.check("det_rule", det_rule(p, c.data.monodromy));
    report.check("sum_rule", verify_sum_rule(p, c.map));
    report.check("A_le_2", cardinality_check(c.map));
    report.check("symmetry", symmetry_check(p, c.map));
    if (c.form) {
        const bool bounded = boundedness(*c.form);
        res["bounded"] = bounded;
        report.flag("boundedness", bounded == expected_bounded(c));
        const auto r = shifted_operator_residual(p, lambda, *c.form);
        res["residuals"] = io::to_json(r);
        report.check("residuals", r.max(), kFormResidualBound);
        report.check("periodicity", c.form->transfer_periodicity, a.floquet.tol_per);
        if (bounded && p.is_schroedinger() && c.form->form_number() != 2) {
            json zeros = json::array();
            bool ok = true;
            for (const auto& z : zero_of_bloch_check(p, lambda, bloch_eigensolution(*c.form), a.floquet)) {
                zeros.push_back(io::to_json(z));
                ok = ok && z.outcome != Outcome::Fail;
            }
            res["zero_bloch"] = zeros;
            report.flag("zero_bloch", ok);
        }
    }
    if (p.is_schroedinger()) {
        const auto tag = sigma_tag_real_axis(p, lambda, {a.floquet.propagation}, a.floquet);
        res["band_lookup"] = {{"tag", to_string(tag.tag)},
                              {"bounded", tag.bounded},
                              {"discriminant", tag.discriminant},
                              {"rationale", tag.rationale}};
        if (tag.jordan) res["band_lookup"]["jordan"] = to_string(*tag.jordan);
    }

    if (in.problem.catalog_name == "intro_counterexample") {
        const auto fx = intro_fixture(1, 4, 256, a.floquet);
        json f{{"lambda", fx.lambda},
               {"first_segment", fx.first_segment},
               {"segment_residuals", fx.segment_residuals},
               {"value_jumps", fx.value_jumps},
               {"derivative_jumps", fx.derivative_jumps},
               {"continuous", fx.continuous},
               {"ratio_range", json::array({fx.ratio_min, fx.ratio_max})},
               {"claim", "non-Bloch eigenstate at lambda = -1"},
               {"implied_multiplier", io::to_json(fx.implied_multiplier)},
               {"implied_multiplier_found", fx.implied_multiplier_found},
               {"classifier", io::to_json(fx.classifier)},
               {"discrepancy", fx.discrepancy},
               {"note", fx.note}};
        res["intro_fixture"] = f;
        res["discrepancy_logged"] = fx.discrepancy;
    }
    return emit(o, report, std::nullopt, out);
}

// ----------------------------------------------------------------------------- bands

int cmd_bands(const Options& o, std::ostream& out) {
    Input in = load_input(o);
    const Problem1D& p = require_1d(in);
    auto& a = in.problem.analysis;
    apply_overrides(o, a);
    if (!a.lambda_range) throw InvalidArgument("bands needs --range or analysis.lambda_range");
    if (!p.is_schroedinger()) throw InvalidArgument("bands needs W = 0 and a real V");
    const auto [lo, hi] = *a.lambda_range;

    Report report("bands", in.raw, params_json(a));
    SpectrumOptions so;
    so.propagation = a.floquet.propagation;
    Stopwatch clock;
    const BandStructure bs = locate_bands(p, lo, hi, a.coarse_n, so);
    report.timing("locate_bands", clock.seconds());
    report.results()["bands"] = io::to_json(bs);

    std::vector<double> row_discrepancy;
    if (o.oracle) {
        Stopwatch oc;
        const UnionReport u = union_check(p, a.k_points, a.mpw, hi, a.coarse_n, so);
        report.timing("union_check", oc.seconds());
        report.results()["union"] = io::to_json(u);
        // Discrepancy per spectral interval: the worst edge among the bands inside it.
        for (const auto& s : bs.spectral_set) {
            double worst = 0.0;
            bool matched = false;
            const std::size_t n = std::min(u.ode_bands.size(), u.planewave_bands.size());
            for (std::size_t j = 0; j < n; ++j) {
                const auto& ob = u.ode_bands[j];
                if (ob.second < s.lo || ob.first > s.hi) continue;
                matched = true;
                const auto& pb = u.planewave_bands[j];
                if (ob.first >= s.lo) worst = std::max(worst, std::abs(ob.first - pb.first));
                if (ob.second <= s.hi) worst = std::max(worst, std::abs(ob.second - pb.second));
            }
            row_discrepancy.push_back(matched ? worst : std::numeric_limits<double>::infinity());
        }
        report.check("union", u.max_discrepancy, kUnionBound, u.count_match ? "" : "band counts differ");
    }
    if (!o.dispersion.empty()) {
        std::vector<FiberEigenvalues> fibers;
        const double kmax = kPi / p.period();
        for (int i = 0; i < a.k_points; ++i) {
            fibers.push_back(planewave_fiber(p, -kmax + 2.0 * kmax * i / (a.k_points - 1), a.mpw));
        }
        std::ofstream f(o.dispersion);
        if (!f) throw InvalidArgument("cannot write " + o.dispersion);
        f << io::dispersion_csv(fibers, static_cast<int>(bs.bands.size()));
    }

    json rows = json::array();
    for (std::size_t i = 0; i < bs.spectral_set.size(); ++i) {
        const auto& s = bs.spectral_set[i];
        json r{{"lambda_lo", s.lo},
               {"lambda_hi", s.hi},
               {"edge_kind_lo", to_string(s.lo_kind)},
               {"edge_kind_hi", to_string(s.hi_kind)},
               {"touching", !s.touching_points.empty()}};
        if (!row_discrepancy.empty()) r["discrepancy"] = row_discrepancy[i];
        rows.push_back(r);
    }
    return emit(o, report, Export{io::bands_csv(bs, row_discrepancy), rows}, out);
}

// ----------------------------------------------------------------------------- bloch

struct Component {
    std::string name;
    const std::vector<cplx>* psi;
    const std::vector<cplx>* p;
};

int cmd_bloch(const Options& o, std::ostream& out) {
    Input in = load_input(o);
    const Problem1D& p = require_1d(in);
    auto& a = in.problem.analysis;
    apply_overrides(o, a);
    if (!a.lambda) throw InvalidArgument("bloch needs --lambda or analysis.lambda");
    const double lambda = *a.lambda;

    Report report("bloch", in.raw, params_json(a));
    const Classification c = classify(p, lambda, a.floquet);
    const SolutionForm& form = *c.form;
    report.results()["classification"] = io::to_json(c);
    const auto r = shifted_operator_residual(p, lambda, form);
    report.results()["residuals"] = io::to_json(r);
    report.check("residuals", r.max(), kFormResidualBound);

    std::vector<Component> comps;
    if (const auto* f1 = std::get_if<Form1>(&form.shape)) {
        for (std::size_t i = 0; i < f1->solutions.size(); ++i) {
            comps.push_back({"bloch" + std::to_string(i + 1), &f1->solutions[i].psi, &f1->solutions[i].p});
        }
    } else if (const auto* f2 = std::get_if<Form2>(&form.shape)) {
        comps.push_back({"p1", &f2->psi, &f2->p1});
        comps.push_back({"p2", &f2->psi, &f2->p2});
    } else {
        const auto& f3 = std::get<Form3>(form.shape);
        comps.push_back({"bloch1", &f3.first.psi, &f3.first.p});
        comps.push_back({"bloch2", &f3.second.psi, &f3.second.p});
    }

    std::vector<std::string> cols{"x"};
    for (const auto& comp : comps) {
        for (const char* part : {"re_psi_", "im_psi_", "re_p_", "im_p_"}) cols.push_back(part + comp.name);
    }
    std::ostringstream csv;
    for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
    csv << '\n';
    json rows = json::array();
    for (std::size_t i = 0; i < form.grid.size(); ++i) {
        json row = json::array({form.grid[i]});
        csv << io::format_double(form.grid[i]);
        for (const auto& comp : comps) {
            for (double v : {(*comp.psi)[i].real(), (*comp.psi)[i].imag(), (*comp.p)[i].real(), (*comp.p)[i].imag()}) {
                row.push_back(v);
                csv << ',' << io::format_double(v);
            }
        }
        csv << '\n';
        rows.push_back(row);
    }
    report.results()["columns"] = cols;
    return emit(o, report, Export{csv.str(), json{{"columns", cols}, {"rows", rows}}}, out);
}

// ----------------------------------------------------------------------------- nd

int cmd_nd(const Options& o, std::ostream& out) {
    Input in = load_input(o);
    if (in.problem.mode != io::Mode::ND) throw InvalidArgument("nd needs an nd problem file");
    auto& a = in.problem.analysis;
    apply_overrides(o, a);
    const io::NdSpec& spec = *in.problem.nd;
    const SeparableProblem sp = io::separable_problem(spec);
    const int d = sp.dimension();

    Report report("nd", in.raw, params_json(a));
    std::vector<Factor> factors;
    for (int j = 0; j < d; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        factors.push_back(make_factor(sp.directions[uj], spec.lambdas[uj], a.floquet, spec.weights[uj]));
    }
    const SeparableSolution sol = assemble(sp, factors, spec.energy);
    json& res = report.results();
    res["mode"] = to_string(sp.mode);
    res["dimension"] = d;
    res["factor_energies"] = sol.factor_energies;
    res["energy"] = sol.energy;
    res["bounded"] = sol.bounded;
    json fs = json::array();
    for (const auto& f : sol.factors) {
        json classes = json::array();
        for (const auto& k : f.classes) classes.push_back(io::to_json(k));
        fs.push_back({{"lambda", f.lambda}, {"sigma_tag", to_string(f.sigma)}, {"form", f.form.form_number()},
                      {"classes", classes}, {"bounded", f.bounded}});
    }
    res["factors"] = fs;
    if (sp.mode == PotentialMode::OrthogonalSum) {
        double sum = 0.0;
        for (double e : sol.factor_energies) sum += e;
        report.flag("energy_sum", sum == sol.energy);
    }

    Stopwatch clock;
    const NdResidual r = residual_nd(sp, sol, spec.grid, spec.box);
    report.timing("residual", clock.seconds());
    res["residual"] = {{"residual", r.residual},
                       {"transformed_residual", r.transformed_residual},
                       {"grid_per_dim", r.grid_per_dim},
                       {"max_abs", r.max_abs}};
    report.check("nd_residuals", r.residual, kNdBound);

    try {
        const auto terms = combination_expand(sp, sol);
        int s = 0;
        for (const auto& f : sol.factors) s += f.form.form_number() == 3 ? 1 : 0;
        Eigen::MatrixXd probes(d, 2 * d + 1);
        for (int c = 0; c < probes.cols(); ++c) {
            for (int j = 0; j < d; ++j) {
                const double t = (c + 0.5 + j) / static_cast<double>(probes.cols());
                probes(j, c) = spec.box.lower(j) + t * (spec.box.upper(j) - spec.box.lower(j));
            }
        }
        json ts = json::array();
        double worst = 0.0;
        for (const auto& t : terms) {
            const double dev = bloch_relation_deviation(sp, t, probes);
            worst = std::max(worst, dev);
            ts.push_back({{"choice", t.choice},
                          {"coefficient", io::to_json(t.coefficient)},
                          {"k_tilde", std::vector<double>(t.k_tilde.data(), t.k_tilde.data() + t.k_tilde.size())},
                          {"k", std::vector<double>(t.k.data(), t.k.data() + t.k.size())},
                          {"bloch_relation_deviation", dev}});
        }
        res["terms"] = ts;
        report.flag("term_count", terms.size() == (std::size_t{1} << s));
        report.check("bloch_relation", worst, kBlochRelationBound);
    } catch (const NotExpandable& e) {
        res["terms"] = nullptr;
        res["not_expandable"] = e.what();
    }

    // Samples of Psi on a uniform grid over the probe box.
    const int n = std::max(2, spec.export_points);
    long total = 1;
    for (int j = 0; j < d; ++j) total *= n;
    Eigen::MatrixXd pts(d, total);
    for (long c = 0; c < total; ++c) {
        long rest = c;
        for (int j = 0; j < d; ++j) {
            const long g = rest % n;
            rest /= n;
            pts(j, c) = spec.box.lower(j) + (spec.box.upper(j) - spec.box.lower(j)) * static_cast<double>(g) / (n - 1);
        }
    }
    const auto psi = evaluate(sp, sol, pts);
    std::ostringstream csv;
    for (int j = 0; j < d; ++j) csv << 'r' << j + 1 << ',';
    csv << "re_psi,im_psi\n";
    json rows = json::array();
    for (long c = 0; c < total; ++c) {
        json row = json::array();
        for (int j = 0; j < d; ++j) {
            csv << io::format_double(pts(j, c)) << ',';
            row.push_back(pts(j, c));
        }
        const auto& v = psi[static_cast<std::size_t>(c)];
        csv << io::format_double(v.real()) << ',' << io::format_double(v.imag()) << '\n';
        row.push_back(v.real());
        row.push_back(v.imag());
        rows.push_back(row);
    }
    return emit(o, report, Export{csv.str(), rows}, out);
}

// ----------------------------------------------------------------------------- transform

int cmd_transform(const Options& o, std::ostream& out) {
    Input in = load_input(o);
    if (in.problem.mode != io::Mode::Transform) throw InvalidArgument("transform needs a transform problem file");
    auto& a = in.problem.analysis;
    apply_overrides(o, a);
    const io::TransformSpec& spec = *in.problem.transform;
    const SampledFunction f = io::sampled_function(spec);

    Report report("transform", in.raw, params_json(a));
    Stopwatch clock;
    const TransformField field = bloch_floquet(f, spec.k_per_dim, spec.shells);
    report.timing("transform", clock.seconds());
    const auto props = check_properties(field);
    const auto pr = parseval(field);
    json& res = report.results();
    res["k_per_dim"] = spec.k_per_dim;
    res["shells"] = spec.shells;
    res["samples"] = f.size();
    res["properties"] = io::to_json(props);
    res["parseval"] = {{"norm_f", pr.norm_f}, {"norm_field", pr.norm_field}, {"relative_deviation", pr.relative_deviation}};
    report.check("quasi_periodicity", props.quasi_periodicity, kTransformBound);
    report.check("k_periodicity", props.k_periodicity, kTransformBound);
    report.check("parseval", pr.relative_deviation, kParsevalBound);
    try {
        const auto inv = invert(field, spec.quadrature, kTransformBound);
        res["inversion_error"] = inv.max_error;
        report.check("inversion", inv.max_error, kTransformBound);
    } catch (const AccuracyError& e) {
        res["inversion_error"] = e.achieved();
        report.check("inversion", e.achieved(), kTransformBound, e.what());
    }

    const int d = f.dimension();
    std::ostringstream csv;
    for (int j = 0; j < d; ++j) csv << 'r' << j + 1 << ',';
    for (int j = 0; j < d; ++j) csv << 'k' << j + 1 << ',';
    csv << "re,im\n";
    json rows = json::array();
    for (std::size_t i = 0; i < field.cell_points(); ++i) {
        const Eigen::VectorXd r = f.point(field.cell_index(i));
        for (std::size_t q = 0; q < field.ks.size(); ++q) {
            const cplx v = field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
            json row = json::array();
            for (int j = 0; j < d; ++j) {
                csv << io::format_double(r(j)) << ',';
                row.push_back(r(j));
            }
            for (int j = 0; j < d; ++j) {
                csv << io::format_double(field.ks[q](j)) << ',';
                row.push_back(field.ks[q](j));
            }
            csv << io::format_double(v.real()) << ',' << io::format_double(v.imag()) << '\n';
            row.push_back(v.real());
            row.push_back(v.imag());
            rows.push_back(row);
        }
    }
    return emit(o, report, Export{csv.str(), rows}, out);
}

// ----------------------------------------------------------------------------- verify

struct Tally {
    int cases = 0;
    int failures = 0;
    int skipped = 0;
    /// The case with the largest deviation relative to its bound.
    double deviation = 0.0;
    double bound = 0.0;
    double worst_ratio = -1.0;

    void add(Outcome o, double dev = 0.0, double b = 0.0) {
        ++cases;
        if (o == Outcome::Fail) ++failures;
        if (o == Outcome::Skip) {
            ++skipped;
            return;
        }
        const double ratio = b > 0.0 ? dev / b : (dev > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > worst_ratio || std::isnan(ratio)) {
            worst_ratio = ratio;
            deviation = dev;
            bound = b;
        }
    }
    void add(const CheckResult& r) { add(r.outcome, r.deviation, r.bound); }
    void add_bounded(double dev, double b) { add(dev <= b ? Outcome::Pass : Outcome::Fail, dev, b); }
    void add_flag(bool ok) { add(ok ? Outcome::Pass : Outcome::Fail); }
};

using Table = std::vector<std::pair<std::string, Tally>>;

Tally& entry(Table& t, const std::string& key) {
    for (auto& [k, v] : t) {
        if (k == key) return v;
    }
    t.emplace_back(key, Tally{});
    return t.back().second;
}

void suite_floquet(Table& t, const io::AnalysisParams& a) {
    std::mt19937_64 rng(a.seed);
    std::uniform_real_distribution<double> lam(-5.0, 40.0);
    for (const auto& e : catalog::builtin()) {
        const auto& p = e.problem;
        for (int i = 0; i < 20; ++i) {
            const double lambda = lam(rng);
            const auto c = classify(p, lambda, a.floquet, i < 4);
            entry(t, "det_rule").add(det_rule(p, c.data.monodromy));
            entry(t, "sum_rule").add(verify_sum_rule(p, c.map));
            entry(t, "A_le_2").add(cardinality_check(c.map));
            entry(t, "symmetry").add(symmetry_check(p, c.map));
            if (c.form) {
                // Classes too close to the unit circle cannot be called either way.
                const auto& mu = c.data.multipliers;
                const double margin = std::min(std::abs(std::abs(mu[0]) - 1.0), std::abs(std::abs(mu[1]) - 1.0));
                if (all_real(c.map.classes) || margin > 1e-6) {
                    entry(t, "boundedness").add_flag(boundedness(*c.form) == expected_bounded(c));
                } else {
                    entry(t, "boundedness").add(Outcome::Skip);
                }
            }
        }
    }

    const auto mathieu = catalog::mathieu();
    const auto bs = locate_bands(mathieu, -1.0, 12.0, 256, {a.floquet.propagation});
    std::vector<double> edges;
    for (const auto& b : bs.bands) {
        if (b.lo_kind != EdgeKind::Truncated) edges.push_back(b.lo);
        if (b.hi_kind != EdgeKind::Truncated) edges.push_back(b.hi);
    }
    for (double e : edges) {
        const auto c = classify(mathieu, e, a.floquet);
        entry(t, "band_edge_jordan").add_flag(c.data.jordan != Jordan::J3);
        for (const auto& z : zero_of_bloch_check(mathieu, e, bloch_eigensolution(*c.form), a.floquet)) {
            entry(t, "zero_bloch").add(z.outcome, z.phase_deviation, 1e-7);
        }
    }
    const auto free = catalog::free_particle();
    // Free bands with gamma = 2 pi touch at (n / 2)^2.
    for (int n = 1; n <= 3; ++n) {
        const double touch = n * n / 4.0;
        const auto c = classify(free, touch, a.floquet, false);
        entry(t, "band_edge_jordan").add_flag(c.data.jordan == Jordan::J1);
    }

    for (double v0 : {0.0, 2.0, 5.0}) {
        const auto p = catalog::constant_potential(v0, 1.0);
        const auto c = classify(p, v0, a.floquet);
        const auto* f2 = std::get_if<Form2>(&c.form->shape);
        double p1 = f2 ? 0.0 : std::numeric_limits<double>::infinity();
        if (f2) {
            for (cplx v : f2->p1) p1 = std::max(p1, std::abs(v));
        }
        const bool zero_class = c.map.classes.size() == 1 && std::abs(c.map.classes[0].representative) <= 1e-12;
        auto& row = entry(t, "p1_zero_constV");
        row.add_bounded(zero_class ? p1 : std::numeric_limits<double>::infinity(), kP1Bound);
    }
}

void suite_spectrum(Table& t, const io::AnalysisParams& a) {
    const auto u = union_check(catalog::mathieu(), a.k_points, a.mpw, 25.0, a.coarse_n, {a.floquet.propagation});
    entry(t, "union").add_bounded(u.max_discrepancy, kUnionBound);
    const auto z = union_check(catalog::free_particle(), a.k_points, a.mpw, 20.0, a.coarse_n, {a.floquet.propagation});
    entry(t, "union").add_bounded(z.max_discrepancy, kUnionBound);
}

void suite_nd(Table& t, const io::AnalysisParams& a) {
    const auto bs = locate_bands(catalog::mathieu(), -1.0, 4.0, 128, {a.floquet.propagation});
    const double l1 = 0.5 * (bs.bands[0].lo + bs.bands[0].hi);
    const auto ex = hartree_example({catalog::mathieu_potential(), PeriodicCoefficient::constant(kTwoPi, 0.0)},
                                    {l1, 0.3}, a.floquet);
    ProbeBox cell{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(kPi, kTwoPi)};
    entry(t, "nd_residuals").add_bounded(residual_nd(ex.problem, ex.solution, 64, cell).residual, kNdBound);

    std::mt19937_64 rng(a.seed + 1);
    std::uniform_real_distribution<double> lam(-1.0, 12.0);
    std::uniform_real_distribution<double> strength(0.2, 1.5);
    ProbeBox unit{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 1.0)};
    for (int i = 0; i < 3; ++i) {
        const auto r = hartree_example({catalog::mathieu_potential(strength(rng)), catalog::mathieu_potential(strength(rng))},
                                       {lam(rng), lam(rng)}, a.floquet);
        entry(t, "nd_residuals").add_bounded(residual_nd(r.problem, r.solution, 64, unit).residual, kNdBound);
    }
}

void suite_transform(Table& t, const io::AnalysisParams&) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = 1.0;
    const auto f = sample_function(LatticeND(m), 32, {-4}, {4}, [](const Eigen::VectorXd& r) {
        return cplx(std::exp(-r.squaredNorm() / 0.32));
    });
    const auto field = bloch_floquet(f, 32, 5);
    const auto props = check_properties(field);
    auto& row = entry(t, "transform_props");
    row.add_bounded(props.quasi_periodicity, kTransformBound);
    row.add_bounded(props.k_periodicity, kTransformBound);

    Eigen::MatrixXd hex(2, 2);
    hex << 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    const auto g = sample_function(LatticeND(hex), 8, {-1, 0}, {1, 1}, [](const Eigen::VectorXd& r) {
        return cplx(std::exp(-r.squaredNorm()), r(1));
    });
    const auto hp = check_properties(bloch_floquet(g, 6, 1));
    row.add_bounded(hp.quasi_periodicity, kTransformBound);
    row.add_bounded(hp.k_periodicity, kTransformBound);
}

int cmd_verify(const Options& o, std::ostream& out) {
    io::AnalysisParams a;
    apply_overrides(o, a);
    const std::string& s = o.suite;
    if (s != "all" && s != "floquet" && s != "spectrum" && s != "nd" && s != "transform") {
        throw InvalidArgument("unknown suite \"" + s + "\"");
    }
    Report report("verify", "suite:" + s, params_json(a));
    Table t;
    Stopwatch clock;
    if (s == "all" || s == "floquet") suite_floquet(t, a);
    if (s == "all" || s == "spectrum") suite_spectrum(t, a);
    if (s == "all" || s == "nd") suite_nd(t, a);
    if (s == "all" || s == "transform") suite_transform(t, a);
    report.timing("suite", clock.seconds());

    std::ostringstream csv;
    csv << "check,outcome,cases,failures,skipped,deviation,bound\n";
    json table = json::object();
    for (const auto& [key, v] : t) {
        const bool ran = v.cases > v.skipped;
        const Outcome oc = v.failures > 0 ? Outcome::Fail : (ran ? Outcome::Pass : Outcome::Skip);
        table[key] = {{"outcome", to_string(oc)},     {"cases", v.cases},
                      {"failures", v.failures},        {"skipped", v.skipped},
                      {"deviation", std::isfinite(v.deviation) ? json(v.deviation) : json("inf")},
                      {"bound", v.bound}};
        report.check(key, CheckResult{key, oc, v.deviation, v.bound, {}});
        csv << key << ',' << to_string(oc) << ',' << v.cases << ',' << v.failures << ',' << v.skipped << ','
            << io::format_double(v.deviation) << ',' << io::format_double(v.bound) << '\n';
    }
    report.results()["suite"] = s;
    report.results()["table"] = table;
    return emit(o, report, Export{csv.str(), table}, out);
}

// ----------------------------------------------------------------------------- catalog

int cmd_catalog(const Options& o, std::ostream& out) {
    json list = json::array();
    std::ostringstream csv;
    csv << "name,period,schroedinger,description\n";
    for (const auto& e : catalog::builtin()) {
        list.push_back({{"name", e.name},
                        {"period", e.problem.period()},
                        {"schroedinger", e.problem.is_schroedinger()},
                        {"description", e.provenance},
                        {"W", io::to_json(e.problem.W())},
                        {"V", io::to_json(e.problem.V())}});
        csv << e.name << ',' << io::format_double(e.problem.period()) << ','
            << (e.problem.is_schroedinger() ? "true" : "false") << ",\"" << e.provenance << "\"\n";
    }
    if (o.format == "csv") {
        out << csv.str();
    } else {
        out << json{{"command", "catalog"}, {"version", io::kSchemaVersion}, {"entries", list}}.dump(2) << '\n';
    }
    return kPass;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Floquet-Bloch analysis of periodic ODEs and separable lattice problems", "blochkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--rtol", o.rtol, "Relative integration tolerance");
    app.add_option("--atol", o.atol, "Absolute integration tolerance");
    app.add_option("--tau-eig", o.tau_eig, "Multiplier coincidence tolerance");
    app.add_option("--tau-scalar", o.tau_scalar, "Scalar-monodromy tolerance");
    app.add_option("--grid", o.grid, "Points per period for form extraction");
    app.add_flag("--oracle", o.oracle, "Cross-check bands against the plane-wave fibers");
    app.add_option("--mpw", o.mpw, "Plane-wave cutoff |m| <= M");
    app.add_option("--seed", o.seed, "Seed for randomized sweeps");
    app.add_option("--out", o.out, "Write the export (or the report) to this path");
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--timings", o.timings, "Include wall-clock timings in the report");

    auto add_input = [&](CLI::App* sub) {
        sub->add_option("file", o.file, "Problem file (fb/1)");
        sub->add_option("--catalog", o.catalog_name, "Use a built-in problem instead of a file");
    };
    auto* analyze = app.add_subcommand("analyze", "Classify the Floquet structure at one lambda");
    add_input(analyze);
    analyze->add_option("--lambda", o.lambda, "Spectral parameter");
    auto* bands = app.add_subcommand("bands", "Locate bands and gaps on a lambda range");
    add_input(bands);
    bands->add_option("--range", o.range, "lambda_min lambda_max")->expected(2);
    bands->add_option("--coarse", o.coarse_n, "Coarse discriminant samples");
    bands->add_option("--k-points", o.k_points, "k points of the plane-wave sweep");
    bands->add_option("--dispersion", o.dispersion, "Write the plane-wave dispersion CSV here");
    auto* bloch = app.add_subcommand("bloch", "Export Bloch solutions and periodic parts");
    add_input(bloch);
    bloch->add_option("--lambda", o.lambda, "Spectral parameter");
    auto* nd = app.add_subcommand("nd", "Assemble and check a separable d-dimensional solution");
    add_input(nd);
    auto* transform = app.add_subcommand("transform", "Bloch-Floquet transform of sampled data");
    add_input(transform);
    auto* verify = app.add_subcommand("verify", "Run the validator suites");
    verify->add_option("suite", o.suite, "all | floquet | spectrum | nd | transform");
    verify->add_option("--k-points", o.k_points, "k points of the plane-wave sweep");
    app.add_subcommand("catalog", "List the built-in problems");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(o, out);
        if (bands->parsed()) return cmd_bands(o, out);
        if (bloch->parsed()) return cmd_bloch(o, out);
        if (nd->parsed()) return cmd_nd(o, out);
        if (transform->parsed()) return cmd_transform(o, out);
        if (verify->parsed()) return cmd_verify(o, out);
        return cmd_catalog(o, out);
    } catch (const InvalidArgument& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const AccuracyError& e) {
        err << "numerical failure: " << e.what() << " (achieved " << e.achieved() << ")\n";
        return kNumericalFailure;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const nlohmann::json::exception& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    }
}

}  // namespace blochkit::cli
