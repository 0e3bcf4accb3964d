#include "blochkit/transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "blochkit/errors.hpp"

namespace blochkit {

namespace {

long floor_div(long a, long b) {
    const long q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

Eigen::VectorXd lattice_vector(const LatticeND& lat, const std::vector<long>& cells) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(lat.dimension());
    for (int j = 0; j < lat.dimension(); ++j) a += static_cast<double>(cells[static_cast<std::size_t>(j)]) * lat.vector(j);
    return a;
}

Eigen::MatrixXcd field_values(const SampledFunction& f, const std::vector<Eigen::VectorXd>& ks,
                              std::size_t cell_points, const std::function<std::vector<long>(std::size_t)>& index) {
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(cell_points), static_cast<Eigen::Index>(ks.size()));
    for (std::size_t i = 0; i < cell_points; ++i) {
        const auto g = index(i);
        for (std::size_t q = 0; q < ks.size(); ++q) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = transform_value(f, g, ks[q]);
        }
    }
    return out;
}

std::vector<long> reference_index(int d, int n, std::size_t i) {
    std::vector<long> g(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        g[static_cast<std::size_t>(j)] = static_cast<long>(i % static_cast<std::size_t>(n));
        i /= static_cast<std::size_t>(n);
    }
    return g;
}

std::size_t power(int base, int d) {
    std::size_t p = 1;
    for (int j = 0; j < d; ++j) p *= static_cast<std::size_t>(base);
    return p;
}

}  // namespace

std::vector<long> SampledFunction::extent() const {
    std::vector<long> e;
    for (int j = 0; j < dimension(); ++j) {
        e.push_back(static_cast<long>(cell_hi[static_cast<std::size_t>(j)] - cell_lo[static_cast<std::size_t>(j)] + 1) *
                    points_per_cell);
    }
    return e;
}

std::vector<long> SampledFunction::grid_index(std::size_t i) const {
    const auto e = extent();
    std::vector<long> g(e.size());
    for (std::size_t j = 0; j < e.size(); ++j) {
        g[j] = static_cast<long>(i % static_cast<std::size_t>(e[j])) + static_cast<long>(cell_lo[j]) * points_per_cell;
        i /= static_cast<std::size_t>(e[j]);
    }
    return g;
}

Eigen::VectorXd SampledFunction::point(const std::vector<long>& g) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(dimension());
    for (int j = 0; j < dimension(); ++j) {
        r += (static_cast<double>(g[static_cast<std::size_t>(j)]) / points_per_cell) * lattice.vector(j);
    }
    return r;
}

cplx SampledFunction::at(const std::vector<long>& g) const {
    const auto e = extent();
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (std::size_t j = 0; j < e.size(); ++j) {
        const long local = g[j] - static_cast<long>(cell_lo[j]) * points_per_cell;
        if (local < 0 || local >= e[j]) return 0.0;
        flat += static_cast<std::size_t>(local) * stride;
        stride *= static_cast<std::size_t>(e[j]);
    }
    return values[flat];
}

double SampledFunction::cell_weight() const {
    return std::abs(lattice.primitive().determinant()) / static_cast<double>(power(points_per_cell, dimension()));
}

SampledFunction sample_function(const LatticeND& lattice, int points_per_cell, std::vector<int> cell_lo,
                                std::vector<int> cell_hi,
                                const std::function<cplx(const Eigen::VectorXd&)>& f) {
    const int d = lattice.dimension();
    if (points_per_cell < 1) throw InvalidArgument("need at least one sample per cell");
    if (static_cast<int>(cell_lo.size()) != d || static_cast<int>(cell_hi.size()) != d) {
        throw InvalidArgument("cell range dimension mismatch");
    }
    for (int j = 0; j < d; ++j) {
        if (cell_hi[static_cast<std::size_t>(j)] < cell_lo[static_cast<std::size_t>(j)]) {
            throw InvalidArgument("empty cell range");
        }
    }
    SampledFunction s{lattice, points_per_cell, std::move(cell_lo), std::move(cell_hi), {}};
    std::size_t total = 1;
    for (long e : s.extent()) total *= static_cast<std::size_t>(e);
    s.values.resize(total);
    for (std::size_t i = 0; i < total; ++i) s.values[i] = f(s.point(s.grid_index(i)));
    return s;
}

std::vector<long> TransformField::cell_index(std::size_t i) const {
    return reference_index(source->dimension(), source->points_per_cell, i);
}

std::vector<Eigen::VectorXd> reciprocal_grid(const LatticeND& lattice, int k_per_dim) {
    if (k_per_dim < 1) throw InvalidArgument("need at least one k point per direction");
    const int d = lattice.dimension();
    const Eigen::MatrixXd& g = lattice.reciprocal();
    std::vector<Eigen::VectorXd> ks;
    const std::size_t total = power(k_per_dim, d);
    for (std::size_t q = 0; q < total; ++q) {
        const auto idx = reference_index(d, k_per_dim, q);
        Eigen::VectorXd k = Eigen::VectorXd::Zero(d);
        for (int j = 0; j < d; ++j) {
            k += (static_cast<double>(idx[static_cast<std::size_t>(j)]) / k_per_dim) * g.row(j).transpose();
        }
        ks.push_back(std::move(k));
    }
    return ks;
}

cplx transform_value(const SampledFunction& f, const std::vector<long>& g, const Eigen::VectorXd& k) {
    const int d = f.dimension();
    const long n = f.points_per_cell;
    // Cells a for which r + a lands in the sampled range.
    std::vector<long> lo(static_cast<std::size_t>(d));
    std::vector<long> hi(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        const long home = floor_div(g[static_cast<std::size_t>(j)], n);
        lo[static_cast<std::size_t>(j)] = f.cell_lo[static_cast<std::size_t>(j)] - home;
        hi[static_cast<std::size_t>(j)] = f.cell_hi[static_cast<std::size_t>(j)] - home;
    }
    cplx acc = 0.0;
    std::vector<long> a = lo;
    std::vector<long> shifted(static_cast<std::size_t>(d));
    while (true) {
        for (int j = 0; j < d; ++j) shifted[static_cast<std::size_t>(j)] = g[static_cast<std::size_t>(j)] + a[static_cast<std::size_t>(j)] * n;
        const cplx v = f.at(shifted);
        if (v != 0.0) acc += v * std::exp(cplx(0.0, -k.dot(lattice_vector(f.lattice, a))));
        int j = 0;
        while (j < d && ++a[static_cast<std::size_t>(j)] > hi[static_cast<std::size_t>(j)]) {
            a[static_cast<std::size_t>(j)] = lo[static_cast<std::size_t>(j)];
            ++j;
        }
        if (j == d) break;
    }
    return acc;
}

TransformField bloch_floquet(const SampledFunction& f, int k_per_dim, int shells) {
    if (shells < 0) throw InvalidArgument("shell count must be non-negative");
    const int d = f.dimension();
    double tail = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto g = f.grid_index(i);
        for (int j = 0; j < d; ++j) {
            const long c = floor_div(g[static_cast<std::size_t>(j)], f.points_per_cell);
            if (c < -shells || c > shells) {
                tail = std::max(tail, std::abs(f.values[i]));
                break;
            }
        }
    }
    if (tail > 0.0) {
        std::ostringstream msg;
        msg << "support extends beyond " << shells << " shells; largest omitted sample " << tail;
        throw TruncationError(msg.str(), tail);
    }

    TransformField field;
    field.source = std::make_shared<const SampledFunction>(f);
    field.k_per_dim = k_per_dim;
    field.shells = shells;
    field.tail_bound = tail;
    field.ks = reciprocal_grid(f.lattice, k_per_dim);
    const int n = f.points_per_cell;
    field.values = field_values(f, field.ks, power(n, d), [&](std::size_t i) { return reference_index(d, n, i); });
    return field;
}

TransformProperties check_properties(const TransformField& field) {
    const SampledFunction& f = *field.source;
    const int d = f.dimension();
    const Eigen::MatrixXd& g = f.lattice.reciprocal();
    TransformProperties out;
    out.max_abs = field.values.cwiseAbs().maxCoeff();
    const double scale = out.max_abs > 0.0 ? out.max_abs : 1.0;
    double qp = 0.0;
    double kp = 0.0;
    for (std::size_t i = 0; i < field.cell_points(); ++i) {
        const auto r = field.cell_index(i);
        for (std::size_t q = 0; q < field.ks.size(); ++q) {
            const cplx base = field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
            const Eigen::VectorXd& k = field.ks[q];
            for (int j = 0; j < d; ++j) {
                auto moved = r;
                moved[static_cast<std::size_t>(j)] += f.points_per_cell;
                const cplx shifted = transform_value(f, moved, k);
                const cplx phase = std::exp(cplx(0.0, k.dot(f.lattice.vector(j))));
                qp = std::max(qp, std::abs(shifted - phase * base));
                const Eigen::VectorXd k2 = k + g.row(j).transpose();
                kp = std::max(kp, std::abs(transform_value(f, r, k2) - base));
            }
        }
    }
    out.quasi_periodicity = qp / scale;
    out.k_periodicity = kp / scale;
    return out;
}

Inversion invert(const TransformField& field, int quadrature_n, double tolerance) {
    const SampledFunction& f = *field.source;
    const int d = f.dimension();
    const int n = f.points_per_cell;
    if (quadrature_n < 1) throw InvalidArgument("quadrature needs at least one point per direction");

    std::vector<Eigen::VectorXd> ks;
    Eigen::MatrixXcd values;
    if (quadrature_n == field.k_per_dim) {
        ks = field.ks;
        values = field.values;
    } else {
        ks = reciprocal_grid(f.lattice, quadrature_n);
        values = field_values(f, ks, field.cell_points(), [&](std::size_t i) { return field.cell_index(i); });
    }

    Inversion out{f, 0.0};
    double worst = 0.0;
    double scale = 0.0;
    const double weight = 1.0 / static_cast<double>(ks.size());
    for (std::size_t s = 0; s < f.size(); ++s) {
        const auto g = f.grid_index(s);
        std::vector<long> cells(static_cast<std::size_t>(d));
        std::size_t ref = 0;
        std::size_t stride = 1;
        for (int j = 0; j < d; ++j) {
            const long c = floor_div(g[static_cast<std::size_t>(j)], n);
            cells[static_cast<std::size_t>(j)] = c;
            ref += static_cast<std::size_t>(g[static_cast<std::size_t>(j)] - c * n) * stride;
            stride *= static_cast<std::size_t>(n);
        }
        const Eigen::VectorXd a = lattice_vector(f.lattice, cells);
        cplx acc = 0.0;
        for (std::size_t q = 0; q < ks.size(); ++q) {
            acc += values(static_cast<Eigen::Index>(ref), static_cast<Eigen::Index>(q)) * std::exp(cplx(0.0, ks[q].dot(a)));
        }
        out.function.values[s] = weight * acc;
        worst = std::max(worst, std::abs(out.function.values[s] - f.values[s]));
        scale = std::max(scale, std::abs(f.values[s]));
    }
    out.max_error = scale > 0.0 ? worst / scale : worst;
    if (out.max_error > tolerance) {
        std::ostringstream msg;
        msg << "inversion with " << quadrature_n << " points per direction reached " << out.max_error;
        throw AccuracyError(msg.str(), out.max_error);
    }
    return out;
}

ParsevalReport parseval(const TransformField& field) {
    const SampledFunction& f = *field.source;
    ParsevalReport out;
    for (const auto& v : f.values) out.norm_f += std::norm(v);
    out.norm_f *= f.cell_weight();
    out.norm_field = field.values.cwiseAbs2().sum() * f.cell_weight() / static_cast<double>(field.ks.size());
    const double scale = std::max(out.norm_f, out.norm_field);
    out.relative_deviation = scale > 0.0 ? std::abs(out.norm_f - out.norm_field) / scale : 0.0;
    return out;
}

}  // namespace blochkit
