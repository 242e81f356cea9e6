#include "parahom/ensemble.hpp"

#include <algorithm>
#include <random>

namespace parahom {

EnsembleKind parse_ensemble_kind(std::string_view name) {
    if (name == "checkerboard") return EnsembleKind::checkerboard;
    if (name == "laminate") return EnsembleKind::laminate;
    if (name == "time_periodic") return EnsembleKind::time_periodic;
    if (name == "constant") return EnsembleKind::constant;
    if (name == "smoothed_noise") return EnsembleKind::smoothed_noise;
    throw DomainError("unknown ensemble kind '" + std::string(name) + "'");
}

std::string to_string(EnsembleKind kind) {
    switch (kind) {
        case EnsembleKind::checkerboard: return "checkerboard";
        case EnsembleKind::laminate: return "laminate";
        case EnsembleKind::time_periodic: return "time_periodic";
        case EnsembleKind::constant: return "constant";
        case EnsembleKind::smoothed_noise: return "smoothed_noise";
    }
    return "unknown";
}

void EnsembleSpec::validate(const Grid& grid) const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in (0, 1]");
    if (cells < 1 || grid.n % cells != 0) throw DomainError("cells must divide n");
    if (cells_t < 1 || grid.n_t % cells_t != 0) throw DomainError("cells_t must divide n_t");
    const bool uses_values = !(kind == EnsembleKind::constant && !matrix.empty());
    for (double v : uses_values ? values : std::vector<double>{})
        if (!(v >= lambda && v <= 1.0))
            throw DomainError("value " + std::to_string(v) + " outside [lambda, 1]");
    if (kind == EnsembleKind::constant) {
        if (!matrix.empty() && matrix.size() != static_cast<std::size_t>(grid.d * grid.d))
            throw DomainError("constant matrix must have d*d entries");
        if (matrix.empty() && values.size() != 1 && values.size() != static_cast<std::size_t>(grid.d))
            throw DomainError("constant kind needs a matrix, one value or d values");
    } else if (values.empty()) {
        throw DomainError("value set is empty");
    }
}

namespace {

int time_cell(const Grid& g, int cells_t, int k) {
    const int interval = (k + g.n_t - 1) % g.n_t;
    return static_cast<int>(static_cast<long long>(interval) * cells_t / g.n_t);
}

int space_cell(const Grid& g, int cells, int j) {
    return static_cast<int>(static_cast<long long>(j) * cells / g.n);
}

// Periodic moving average of odd width along one axis of a strided array.
void box_blur(std::vector<double>& v, std::size_t count, std::size_t stride, std::size_t length,
              int width) {
    const int half = width / 2;
    std::vector<double> line(length), out(length);
    for (std::size_t base = 0; base < count; ++base) {
        const std::size_t outer = base / stride, inner = base % stride;
        const std::size_t start = outer * stride * length + inner;
        for (std::size_t i = 0; i < length; ++i) line[i] = v[start + i * stride];
        for (std::size_t i = 0; i < length; ++i) {
            double s = 0.0;
            for (int o = -half; o <= half; ++o) {
                const auto idx = (static_cast<long long>(i) + o + static_cast<long long>(length) * 4) %
                                 static_cast<long long>(length);
                s += line[static_cast<std::size_t>(idx)];
            }
            out[i] = s / width;
        }
        for (std::size_t i = 0; i < length; ++i) v[start + i * stride] = out[i];
    }
}

}  // namespace

CoefficientField generate(const EnsembleSpec& spec, const Grid& grid) {
    grid.validate(std::numeric_limits<double>::infinity());
    spec.validate(grid);
    const int d = grid.d;
    const std::size_t N = grid.spatial_size();
    SpaceTimeField f(grid, Rank::matrix);
    auto set_diag = [&](int t, std::size_t x, int j, double v) { f(j * d + j, t, x) = v; };

    switch (spec.kind) {
        case EnsembleKind::constant: {
            Matrix m = Matrix::Zero(d, d);
            if (!spec.matrix.empty()) {
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c) m(r, c) = spec.matrix[static_cast<std::size_t>(r * d + c)];
            } else {
                for (int j = 0; j < d; ++j)
                    m(j, j) = spec.values.size() == 1 ? spec.values[0] : spec.values[static_cast<std::size_t>(j)];
            }
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) std::fill_n(f.values(r * d + c).begin(), grid.size(), m(r, c));
            break;
        }
        case EnsembleKind::checkerboard: {
            std::size_t space_cells = 1;
            for (int k = 0; k < d; ++k) space_cells *= static_cast<std::size_t>(spec.cells);
            std::mt19937_64 rng(spec.seed);
            const std::size_t nv = spec.values.size();
            std::vector<double> draw(static_cast<std::size_t>(spec.cells_t) * space_cells * static_cast<std::size_t>(d));
            for (double& v : draw) v = spec.values[rng() % nv];
            for (int t = 0; t < grid.n_t; ++t) {
                const std::size_t ct = static_cast<std::size_t>(time_cell(grid, spec.cells_t, t));
                for (std::size_t x = 0; x < N; ++x) {
                    const Index j = grid.unravel(x);
                    std::size_t cell = 0;
                    for (int k = d - 1; k >= 0; --k)
                        cell = cell * static_cast<std::size_t>(spec.cells) +
                               static_cast<std::size_t>(space_cell(grid, spec.cells, j[k]));
                    const std::size_t base = (ct * space_cells + cell) * static_cast<std::size_t>(d);
                    for (int e = 0; e < d; ++e) set_diag(t, x, e, draw[base + static_cast<std::size_t>(e)]);
                }
            }
            break;
        }
        case EnsembleKind::laminate: {
            const std::size_t nv = spec.values.size();
            for (int t = 0; t < grid.n_t; ++t)
                for (std::size_t x = 0; x < N; ++x) {
                    const std::size_t c = static_cast<std::size_t>(space_cell(grid, spec.cells, grid.unravel(x)[0]));
                    for (int e = 0; e < d; ++e) set_diag(t, x, e, spec.values[(c + static_cast<std::size_t>(e)) % nv]);
                }
            break;
        }
        case EnsembleKind::time_periodic: {
            const std::size_t nv = spec.values.size();
            for (int t = 0; t < grid.n_t; ++t) {
                const double v = spec.values[static_cast<std::size_t>(time_cell(grid, spec.cells_t, t)) % nv];
                for (std::size_t x = 0; x < N; ++x)
                    for (int e = 0; e < d; ++e) set_diag(t, x, e, v);
            }
            break;
        }
        case EnsembleKind::smoothed_noise: {
            std::mt19937_64 rng(spec.seed);
            std::vector<double> noise(grid.size());
            for (double& v : noise) v = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
            const int wx = (grid.n / spec.cells) | 1;
            const int wt = (grid.n_t / spec.cells_t) | 1;
            for (int pass = 0; pass < 2; ++pass) {
                for (int k = 0; k < d; ++k)
                    box_blur(noise, grid.size() / static_cast<std::size_t>(grid.n), grid.stride(k),
                             static_cast<std::size_t>(grid.n), wx);
                box_blur(noise, N, N, static_cast<std::size_t>(grid.n_t), wt);
            }
            const double lo = spec.values.front(), hi = spec.values.back();
            for (int t = 0; t < grid.n_t; ++t)
                for (std::size_t x = 0; x < N; ++x) {
                    const double v = noise[static_cast<std::size_t>(t) * N + x] < 0.0 ? lo : hi;
                    for (int e = 0; e < d; ++e) set_diag(t, x, e, v);
                }
            break;
        }
    }
    return CoefficientField(std::move(f), spec.lambda);
}

CoefficientField shift(const CoefficientField& a, const Index& dx, int dt) {
    const Grid& g = a.grid();
    SpaceTimeField out(g, Rank::matrix);
    const std::size_t N = g.spatial_size();
    std::vector<std::size_t> map(N);
    for (std::size_t x = 0; x < N; ++x) {
        Index j = g.unravel(x);
        for (int k = 0; k < g.d; ++k) j[k] += dx[k];
        map[x] = g.ravel_wrapped(j);
    }
    for (int c = 0; c < out.components(); ++c)
        for (int t = 0; t < g.n_t; ++t) {
            const auto src = a.field().slice(g.wrap_t(t + dt), c);
            auto dst = out.slice(t, c);
            for (std::size_t x = 0; x < N; ++x) dst[x] = src[map[x]];
        }
    return CoefficientField(std::move(out), a.lambda());
}

}  // namespace parahom
