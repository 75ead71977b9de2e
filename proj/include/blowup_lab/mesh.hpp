#pragma once

#include <memory>
#include <span>
#include <vector>

namespace blowup_lab {

enum class GridKind { Interval, Radial };

// Uniform 1-D grid. Interval grids are symmetric about 0 on [-extent, extent];
// radial grids cover [0, extent] and carry the measure exponent N.
class Grid {
 public:
  GridKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  double extent() const { return extent_; }
  double spacing() const { return h_; }
  int intervals() const { return static_cast<int>(nodes_.size()) - 1; }
  std::size_t size() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }
  double node(std::size_t i) const { return nodes_[i]; }

  // Trapezoid weights including the radial surface factor omega_{N-1} r^{N-1}.
  std::span<const double> measure_weights() const { return weights_; }

  friend std::shared_ptr<const Grid> build_grid(GridKind, int, double, int);

 private:
  Grid() = default;

  GridKind kind_ = GridKind::Interval;
  int dimension_ = 1;
  double extent_ = 0.0;
  double h_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

// Throws InvalidArgument for extent <= 0, m < 8, N < 1, or an interval grid
// with N != 1.
GridPtr build_grid(GridKind kind, int N, double extent, int m);

// Area of the unit sphere S^{N-1}; 2 for N = 1.
double unit_sphere_area(int N);

struct Field {
  GridPtr grid;
  std::vector<double> values;
  double time = 0.0;

  Field() = default;
  Field(GridPtr g, double t = 0.0);
  Field(GridPtr g, std::vector<double> v, double t = 0.0);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

// Samples f at every node.
template <class F>
Field sample(const GridPtr& grid, F&& f, double t = 0.0) {
  Field out(grid, t);
  for (std::size_t i = 0; i < grid->size(); ++i) out.values[i] = f(grid->node(i));
  return out;
}

// Precomputed three-point stencil of the discrete Laplacian on a grid.
// Interval rows are evaluated as ((f[i-1] + f[i+1]) - 2 f[i]) / h^2, which keeps
// mirror-symmetric data exactly mirror-symmetric.
class LaplacianStencil {
 public:
  explicit LaplacianStencil(const Grid& grid);

  // Writes interior rows of the Laplacian of `in` to `out`; Dirichlet boundary
  // rows are set to 0. Radial grids use the r = 0 limit 2N (f1 - f0) / h^2.
  void apply(std::span<const double> in, std::span<double> out) const;

  // Dimension factor of the stencil used by the diffusion step bound.
  double dimension_factor() const { return dim_factor_; }

 private:
  GridKind kind_;
  double inv_h2_;
  double center_coeff_ = 0.0;
  double dim_factor_ = 1.0;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

Field laplacian(const Field& f);

// Squared centred-difference gradient; one-sided second-order at the ends.
Field gradient_sq(const Field& f);

// Centred-difference first derivative (one-sided at the ends).
Field gradient(const Field& f);

// Trapezoid integral of f against the grid measure.
double integrate(const Field& f);

// Integral of f(y) |y|^{2k} exp(-|y|^2/4) against the grid measure, summed left
// to right. k > 6 throws UnsupportedMoment.
double weighted_moment_integral(const Field& f, int k);

// Piecewise-linear interpolation; throws OutOfDomain outside the grid extent.
// Radial grids accept r in [0, extent].
double interpolate(const Field& f, double x);

}  // namespace blowup_lab
