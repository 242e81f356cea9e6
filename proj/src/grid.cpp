#include "parahom/grid.hpp"

#include <algorithm>
#include <string>

#include "parahom/kernels.hpp"

namespace parahom {

int component_count(Rank rank, int d) {
    switch (rank) {
        case Rank::scalar: return 1;
        case Rank::vector: return d;
        case Rank::matrix: return d * d;
        case Rank::tensor3: return d * d * d;
    }
    throw DomainError("unknown rank");
}

Grid Grid::torus(int d, int n, int n_t, double length, double period) {
    Grid g;
    g.d = d;
    g.n = n;
    g.n_t = n_t;
    g.h = length / n;
    g.tau = period / n_t;
    return g;
}

Grid Grid::parabolic(int d, int n, int n_t, double h_ratio, double length) {
    Grid g;
    g.d = d;
    g.n = n;
    g.n_t = n_t;
    g.h = length / n;
    g.tau = h_ratio * g.h * g.h;
    return g;
}

std::size_t Grid::spatial_size() const {
    std::size_t s = 1;
    for (int k = 0; k < d; ++k) s *= static_cast<std::size_t>(n);
    return s;
}

std::size_t Grid::stride(int axis) const {
    std::size_t s = 1;
    for (int k = 0; k < axis; ++k) s *= static_cast<std::size_t>(n);
    return s;
}

std::size_t Grid::ravel(const Index& j) const {
    std::size_t x = 0;
    for (int k = d - 1; k >= 0; --k) x = x * static_cast<std::size_t>(n) + static_cast<std::size_t>(j[k]);
    return x;
}

std::size_t Grid::ravel_wrapped(const Index& j) const {
    Index w{};
    for (int k = 0; k < d; ++k) w[k] = ((j[k] % n) + n) % n;
    return ravel(w);
}

Index Grid::unravel(std::size_t x) const {
    Index j{};
    for (int k = 0; k < d; ++k) {
        j[k] = static_cast<int>(x % static_cast<std::size_t>(n));
        x /= static_cast<std::size_t>(n);
    }
    return j;
}

void Grid::validate(double max_tau_over_h) const {
    if (d < 1 || d > 3) throw DomainError("grid dimension must be 1, 2 or 3");
    if (n < 4) throw DomainError("grid needs at least 4 points per axis");
    if (n_t < 4) throw DomainError("grid needs at least 4 time levels");
    if (!(h > 0.0) || !(tau > 0.0)) throw DomainError("grid spacing must be positive");
    if (tau > max_tau_over_h * h * (1.0 + 1e-12))
        throw DomainError("time step violates the parabolic consistency bound tau <= h");
}

bool Grid::same_geometry(const Grid& o) const {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
    return d == o.d && n == o.n && n_t == o.n_t && periodic == o.periodic && close(h, o.h) &&
           close(tau, o.tau);
}

SpaceTimeField::SpaceTimeField(const Grid& grid, Rank rank)
    : grid_(grid), rank_(rank), components_(component_count(rank, grid.d)) {
    data_.assign(static_cast<std::size_t>(components_) * grid_.size(), 0.0);
}

std::span<double> SpaceTimeField::values(int c) {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * grid_.size(), grid_.size());
}

std::span<const double> SpaceTimeField::values(int c) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * grid_.size(),
                                                  grid_.size());
}

std::span<double> SpaceTimeField::slice(int t, int c) {
    return std::span<double>(data_).subspan(offset(c, t, 0), grid_.spatial_size());
}

std::span<const double> SpaceTimeField::slice(int t, int c) const {
    return std::span<const double>(data_).subspan(offset(c, t, 0), grid_.spatial_size());
}

bool SpaceTimeField::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Cylinders

Cylinder Cylinder::make(const Grid& g, double radius, const Index& center, int top) {
    Cylinder C;
    C.radius = radius;
    C.half_width = static_cast<int>(std::floor(radius / g.h + 1e-9));
    C.levels = static_cast<int>(std::floor(radius * radius / g.tau + 1e-9));
    C.center = center;
    C.top = top;
    if (C.half_width < 1 || C.levels < 1)
        throw DomainError("cylinder radius " + std::to_string(radius) + " is below grid resolution");
    return C;
}

Cylinder Cylinder::centered(const Grid& local) {
    Cylinder C;
    C.half_width = (local.n - 1) / 2;
    C.levels = local.n_t - 1;
    C.radius = C.half_width * local.h;
    for (int k = 0; k < local.d; ++k) C.center[k] = C.half_width;
    C.top = local.n_t - 1;
    return C;
}

Cylinder Cylinder::shrunk(const Grid& g, double r) const {
    return make(g, r, center, top);
}

Grid Cylinder::local_grid(const Grid& host) const {
    Grid g = host;
    g.n = 2 * half_width + 1;
    g.n_t = levels + 1;
    g.periodic = false;
    for (int k = 0; k < host.d; ++k) g.origin[k] = host.origin[k] + center[k] - half_width;
    g.origin_t = host.origin_t + top - levels;
    return g;
}

void Cylinder::check_fits(const Grid& g, bool with_bottom) const {
    if (g.periodic) {
        // m = n/2 puts both faces on the same torus node; their half weights add to one.
        if (2 * half_width > g.n) throw DomainError("cylinder wider than the torus");
        return;
    }
    for (int k = 0; k < g.d; ++k)
        if (center[k] - half_width < 0 || center[k] + half_width > g.n - 1)
            throw DomainError("cylinder exceeds grid in space");
    const int lowest = top - levels + (with_bottom ? 0 : 1);
    if (lowest < 0 || top > g.n_t - 1) throw DomainError("cylinder exceeds grid in time");
}

std::size_t Cylinder::node_count(int d) const {
    std::size_t c = static_cast<std::size_t>(levels);
    for (int k = 0; k < d; ++k) c *= static_cast<std::size_t>(2 * half_width + 1);
    return c;
}

std::size_t Cylinder::cell_count(int d) const {
    std::size_t c = static_cast<std::size_t>(levels);
    for (int k = 0; k < d; ++k) c *= static_cast<std::size_t>(2 * half_width);
    return c;
}

namespace {

// Odometer over offsets in [lo, hi]^d.
template <class F>
void for_each_offset(int d, int lo, int hi, F&& f) {
    Index off{};
    for (int k = 0; k < d; ++k) off[k] = lo;
    while (true) {
        f(off);
        int k = 0;
        while (k < d) {
            if (++off[k] <= hi) break;
            off[k] = lo;
            ++k;
        }
        if (k == d) break;
    }
}

}  // namespace

void for_each_node(const Grid& g, const Cylinder& C,
                   const std::function<void(int, std::size_t, double, const Index&, int)>& fn) {
    C.check_fits(g);
    const int m = C.half_width;
    for (int s = -C.levels + 1; s <= 0; ++s) {
        const int t = g.periodic ? g.wrap_t(C.top + s) : C.top + s;
        for_each_offset(g.d, -m, m, [&](const Index& off) {
            Index j{};
            double w = 1.0;
            for (int k = 0; k < g.d; ++k) {
                j[k] = C.center[k] + off[k];
                if (off[k] == -m || off[k] == m) w *= 0.5;
            }
            const std::size_t x = g.periodic ? g.ravel_wrapped(j) : g.ravel(j);
            fn(t, x, w, off, s);
        });
    }
}

void for_each_cell(const Grid& g, const Cylinder& C,
                   const std::function<void(int, std::size_t, const Index&, int)>& fn) {
    C.check_fits(g);
    const int m = C.half_width;
    for (int s = -C.levels + 1; s <= 0; ++s) {
        const int t = g.periodic ? g.wrap_t(C.top + s) : C.top + s;
        for_each_offset(g.d, -m, m - 1, [&](const Index& off) {
            Index j{};
            for (int k = 0; k < g.d; ++k) j[k] = C.center[k] + off[k];
            const std::size_t x = g.periodic ? g.ravel_wrapped(j) : g.ravel(j);
            fn(t, x, off, s);
        });
    }
}

// ---------------------------------------------------------------------------
// Differences

void forward_diff(const Grid& g, std::span<const double> u, int axis, std::span<double> out) {
    const auto& K = kernels::active();
    const std::size_t N = g.spatial_size();
    const std::size_t s = g.stride(axis);
    const std::size_t B = s * static_cast<std::size_t>(g.n);
    const double inv_h = 1.0 / g.h;
    for (std::size_t b = 0; b < N; b += B) {
        const double* ub = u.data() + b;
        double* ob = out.data() + b;
        K.scaled_diff(ub + s, ub, inv_h, ob, B - s);
        if (g.periodic)
            K.scaled_diff(ub, ub + B - s, inv_h, ob + B - s, s);
        else
            std::fill(ob + B - s, ob + B, 0.0);
    }
}

void backward_diff(const Grid& g, std::span<const double> f, int axis, std::span<double> out,
                   bool accumulate) {
    const auto& K = kernels::active();
    const std::size_t N = g.spatial_size();
    const std::size_t s = g.stride(axis);
    const std::size_t B = s * static_cast<std::size_t>(g.n);
    const double inv_h = 1.0 / g.h;
    auto diff = accumulate ? K.add_scaled_diff : K.scaled_diff;
    for (std::size_t b = 0; b < N; b += B) {
        const double* fb = f.data() + b;
        double* ob = out.data() + b;
        if (g.periodic) {
            diff(fb, fb + B - s, inv_h, ob, s);
            diff(fb + s, fb, inv_h, ob + s, B - s);
        } else {
            // f on the last node is not an edge; f below the first node is zero.
            for (std::size_t i = 0; i < s; ++i) {
                const double first = fb[i] * inv_h;
                const double last = -fb[B - 2 * s + i] * inv_h;
                if (accumulate) {
                    ob[i] += first;
                    ob[B - s + i] += last;
                } else {
                    ob[i] = first;
                    ob[B - s + i] = last;
                }
            }
            diff(fb + s, fb, inv_h, ob + s, B - 2 * s);
        }
    }
}

SpaceTimeField grad(const SpaceTimeField& u) {
    if (u.rank() != Rank::scalar) throw DomainError("grad expects a scalar field");
    const Grid& g = u.grid();
    SpaceTimeField out(g, Rank::vector);
    for (int t = 0; t < g.n_t; ++t)
        for (int k = 0; k < g.d; ++k) forward_diff(g, u.slice(t), k, out.slice(t, k));
    return out;
}

SpaceTimeField div(const SpaceTimeField& F) {
    if (F.rank() != Rank::vector) throw DomainError("div expects a vector field");
    const Grid& g = F.grid();
    SpaceTimeField out(g, Rank::scalar);
    for (int t = 0; t < g.n_t; ++t)
        for (int k = 0; k < g.d; ++k) backward_diff(g, F.slice(t, k), k, out.slice(t), k > 0);
    return out;
}

SpaceTimeField laplacian(const SpaceTimeField& u) { return div(grad(u)); }

double inner(const SpaceTimeField& a, const SpaceTimeField& b) {
    if (a.data().size() != b.data().size()) throw DomainError("inner: size mismatch");
    return kernels::active().dot(a.data().data(), b.data().data(), a.data().size());
}

// ---------------------------------------------------------------------------
// Averages

std::vector<double> cylinder_average(const SpaceTimeField& f, const Cylinder& C) {
    std::vector<double> acc(static_cast<std::size_t>(f.components()), 0.0);
    double wsum = 0.0;
    for_each_node(f.grid(), C, [&](int t, std::size_t x, double w, const Index&, int) {
        for (int c = 0; c < f.components(); ++c) acc[static_cast<std::size_t>(c)] += w * f(c, t, x);
        wsum += w;
    });
    for (double& v : acc) v /= wsum;
    return acc;
}

std::vector<double> slice_average(const SpaceTimeField& f, const Cylinder& C, int t) {
    Cylinder one = C;
    one.levels = 1;
    one.top = t;
    return cylinder_average(f, one);
}

std::vector<double> cell_average(const SpaceTimeField& f, const Cylinder& C) {
    std::vector<double> acc(static_cast<std::size_t>(f.components()), 0.0);
    std::size_t count = 0;
    for_each_cell(f.grid(), C, [&](int t, std::size_t x, const Index&, int) {
        for (int c = 0; c < f.components(); ++c) acc[static_cast<std::size_t>(c)] += f(c, t, x);
        ++count;
    });
    for (double& v : acc) v /= static_cast<double>(count);
    return acc;
}

SpaceTimeField restrict_to(const SpaceTimeField& torus_field, const Grid& window) {
    const Grid& g = torus_field.grid();
    if (!g.periodic) throw DomainError("restrict_to expects a periodic source field");
    if (g.d != window.d || std::abs(g.h - window.h) > 1e-12 * g.h ||
        std::abs(g.tau - window.tau) > 1e-12 * g.tau)
        throw DomainError("restrict_to: spacing mismatch");
    SpaceTimeField out(window, torus_field.rank());
    const std::size_t Nw = window.spatial_size();
    std::vector<std::size_t> map(Nw);
    for (std::size_t x = 0; x < Nw; ++x) {
        Index j = window.unravel(x);
        for (int k = 0; k < g.d; ++k) j[k] += window.origin[k];
        map[x] = g.ravel_wrapped(j);
    }
    for (int c = 0; c < out.components(); ++c)
        for (int t = 0; t < window.n_t; ++t) {
            const auto src = torus_field.slice(g.wrap_t(window.origin_t + t), c);
            auto dst = out.slice(t, c);
            for (std::size_t x = 0; x < Nw; ++x) dst[x] = src[map[x]];
        }
    return out;
}

SpaceTimeField sample(const Grid& g, const Cylinder& C,
                      const std::function<double(std::span<const double>, double)>& fn) {
    SpaceTimeField out(g, Rank::scalar);
    const std::size_t N = g.spatial_size();
    std::array<double, 3> x{};
    for (int t = 0; t < g.n_t; ++t) {
        const double time = (t - C.top) * g.tau;
        auto s = out.slice(t);
        for (std::size_t i = 0; i < N; ++i) {
            const Index j = g.unravel(i);
            for (int k = 0; k < g.d; ++k) x[k] = (j[k] - C.center[k]) * g.h;
            s[i] = fn(std::span<const double>(x.data(), static_cast<std::size_t>(g.d)), time);
        }
    }
    return out;
}

}  // namespace parahom
