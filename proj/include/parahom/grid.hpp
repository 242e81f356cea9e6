#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "parahom/errors.hpp"

namespace parahom {

using Index = std::array<int, 3>;

enum class Rank : std::uint32_t { scalar = 0, vector = 1, matrix = 2, tensor3 = 3 };

int component_count(Rank rank, int d);

// Uniform space-time lattice. Periodic grids are the torus carrying the
// coefficient field and the corrector; non-periodic grids are windows cut out
// of a torus (see Cylinder::local_grid), and remember where they sit through
// origin/origin_t so that torus data can be looked up under them.
struct Grid {
    int d = 2;
    int n = 64;
    int n_t = 64;
    double h = 1.0 / 64;
    double tau = 1.0 / 64;
    bool periodic = true;
    Index origin{};
    int origin_t = 0;

    static Grid torus(int d, int n, int n_t, double length = 1.0, double period = 1.0);
    // tau = h_ratio * h^2, so the time period is n_t * tau.
    static Grid parabolic(int d, int n, int n_t, double h_ratio = 1.0, double length = 1.0);

    std::size_t spatial_size() const;
    std::size_t size() const { return static_cast<std::size_t>(n_t) * spatial_size(); }
    std::size_t stride(int axis) const;
    double length() const { return n * h; }
    double period() const { return n_t * tau; }

    std::size_t ravel(const Index& j) const;
    Index unravel(std::size_t x) const;
    // Wraps each coordinate into [0, n) (periodic lookup).
    std::size_t ravel_wrapped(const Index& j) const;
    int wrap_t(int t) const { return ((t % n_t) + n_t) % n_t; }

    // Throws DomainError. tau <= max_tau_over_h * h is the parabolic consistency check.
    void validate(double max_tau_over_h = 1.0) const;
    bool same_geometry(const Grid& other) const;
};

// Scalar, vector, matrix or rank-3 samples on a Grid. Storage is one
// contiguous block per component (time outermost, then x_d..x_1), which keeps
// the stencil kernels on unit stride; the file format interleaves components.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(const Grid& grid, Rank rank);

    const Grid& grid() const { return grid_; }
    Rank rank() const { return rank_; }
    int components() const { return components_; }

    std::span<double> values(int c = 0);
    std::span<const double> values(int c = 0) const;
    std::span<double> slice(int t, int c = 0);
    std::span<const double> slice(int t, int c = 0) const;

    double& operator()(int c, int t, std::size_t x) { return data_[offset(c, t, x)]; }
    double operator()(int c, int t, std::size_t x) const { return data_[offset(c, t, x)]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool all_finite() const;

private:
    std::size_t offset(int c, int t, std::size_t x) const {
        return (static_cast<std::size_t>(c) * grid_.n_t + static_cast<std::size_t>(t)) *
                   grid_.spatial_size() +
               x;
    }

    Grid grid_{};
    Rank rank_ = Rank::scalar;
    int components_ = 1;
    std::vector<double> data_;
};

// Box-based parabolic cylinder Q_R x (-R^2, 0], placed on a grid by the index
// of its spatial center and of its top time level. Nodes span center +- m per
// axis; the time levels are top-K+1 .. top (the half-open interval), with the
// bottom level top-K only used as initial data by the Dirichlet solver.
struct Cylinder {
    double radius = 0.0;
    int half_width = 0;  // m
    int levels = 0;      // K
    Index center{};
    int top = 0;

    static Cylinder make(const Grid& g, double radius, const Index& center, int top);
    // The cylinder that fills a grid produced by local_grid().
    static Cylinder centered(const Grid& local);

    Cylinder shrunk(const Grid& g, double r) const;
    // Window with n = 2m+1 nodes per axis and n_t = K+1 levels (bottom included).
    Grid local_grid(const Grid& host) const;
    // Throws DomainError when the cylinder leaves a non-periodic grid or
    // overlaps itself on a torus.
    void check_fits(const Grid& g, bool with_bottom = false) const;

    std::size_t node_count(int d) const;
    std::size_t cell_count(int d) const;
};

// Iterate the nodes of C with trapezoid weights (1/2 per axis on the box faces),
// over levels top-K+1..top. The callback receives the wrapped time index, the
// wrapped spatial index, the weight, the offset from the center and the level
// offset (0 at the top, negative below).
void for_each_node(const Grid& g, const Cylinder& C,
                   const std::function<void(int t, std::size_t x, double w, const Index& off,
                                            int s)>& fn);
// Iterate the cells of C, identified with their lower corner node, where the
// forward-difference gradient lives: offsets in [-m, m-1] per axis.
void for_each_cell(const Grid& g, const Cylinder& C,
                   const std::function<void(int t, std::size_t x, const Index& off, int s)>& fn);

// Slice-level discrete calculus. Forward differences for the gradient,
// backward differences for the divergence, so that div = -grad^T exactly.
// On non-periodic grids the edge leaving the last node does not exist: its
// gradient component is zero and div ignores it (zero extension).
void forward_diff(const Grid& g, std::span<const double> u, int axis, std::span<double> out);
void backward_diff(const Grid& g, std::span<const double> f, int axis, std::span<double> out,
                   bool accumulate = false);

SpaceTimeField grad(const SpaceTimeField& u);
SpaceTimeField div(const SpaceTimeField& F);
SpaceTimeField laplacian(const SpaceTimeField& u);

// Inner product over all samples and components.
double inner(const SpaceTimeField& a, const SpaceTimeField& b);

std::vector<double> cylinder_average(const SpaceTimeField& f, const Cylinder& C);
// Spatial box average of C at the (grid) time index t.
std::vector<double> slice_average(const SpaceTimeField& f, const Cylinder& C, int t);
// Mean over the cells of C (for densities built from forward differences).
std::vector<double> cell_average(const SpaceTimeField& f, const Cylinder& C);

// Samples a periodic field under a window grid (origin-shifted, wrapped).
SpaceTimeField restrict_to(const SpaceTimeField& torus_field, const Grid& window);

// Fills a scalar field from fn(x, t) with x measured from the center of C and
// t from its top level.
SpaceTimeField sample(const Grid& g, const Cylinder& C,
                      const std::function<double(std::span<const double> x, double t)>& fn);

void write_field(const SpaceTimeField& f, const std::filesystem::path& path);
// Geometry defaults to the unit torus (h = 1/n, tau = 1/n_t); pass a grid
// with matching sizes to restore spacing.
SpaceTimeField read_field(const std::filesystem::path& path);
SpaceTimeField read_field(const std::filesystem::path& path, const Grid& geometry);

}  // namespace parahom
