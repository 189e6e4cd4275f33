#include "peh/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace peh {

namespace {

void check_range(const char* name, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) throw BoundsError(name, v, lo, hi);
}

}  // namespace

ShapeParams::ShapeParams(double L, double l, double H, double R, double h)
    : length(L), piezo_length_ratio(l), piezo_thickness_ratio(H), aspect_ratio(R), thickness(h) {
  validate();
}

ShapeParams ShapeParams::unchecked(double L, double l, double H, double R, double h) {
  ShapeParams p;
  p.length = L;
  p.piezo_length_ratio = l;
  p.piezo_thickness_ratio = H;
  p.aspect_ratio = R;
  p.thickness = h;
  return p;
}

void ShapeParams::validate() const {
  check_range("length", length, kLengthLo, kLengthHi);
  check_range("piezo_thickness_ratio", piezo_thickness_ratio, kThickRatioLo, kThickRatioHi);
  check_range("piezo_length_ratio", piezo_length_ratio, kLenRatioLo, kLenRatioHi);
  if (!(aspect_ratio > 0))
    throw BoundsError("aspect_ratio", aspect_ratio, 0.0, std::numeric_limits<double>::infinity());
  if (!(thickness > 0))
    throw BoundsError("thickness", thickness, 0.0, std::numeric_limits<double>::infinity());
}

DeviceDimensions expand_shape(const ShapeParams& params) {
  params.validate();
  DeviceDimensions d;
  d.length = params.length;
  d.width = params.aspect_ratio * params.length;
  d.piezo_thickness = params.piezo_thickness_ratio * params.thickness;
  d.substrate_thickness = params.thickness - 2.0 * d.piezo_thickness;
  d.piezo_length = params.piezo_length_ratio * params.length;
  d.total_thickness = params.thickness;
  return d;
}

BsplineBasis1d::BsplineBasis1d(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  if (degree_ < 0 || static_cast<int>(knots_.size()) < 2 * (degree_ + 1))
    throw ArgumentError("knot vector too short for degree");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    throw ArgumentError("knot vector must be non-decreasing");
}

BsplineBasis1d BsplineBasis1d::uniform_open(int degree, int spans) {
  if (spans < 1) throw ArgumentError("need at least one span");
  std::vector<double> knots;
  knots.reserve(2 * (degree + 1) + spans - 1);
  for (int i = 0; i <= degree; ++i) knots.push_back(0.0);
  for (int i = 1; i < spans; ++i) knots.push_back(static_cast<double>(i) / spans);
  for (int i = 0; i <= degree; ++i) knots.push_back(1.0);
  return BsplineBasis1d(degree, std::move(knots));
}

int BsplineBasis1d::num_spans() const {
  int n = 0;
  for (size_t i = 0; i + 1 < knots_.size(); ++i)
    if (knots_[i + 1] > knots_[i]) ++n;
  return n;
}

int BsplineBasis1d::find_span(double u) const {
  const int n = num_basis() - 1;
  if (u >= knots_[n + 1]) return n;  // right end maps to the last span
  if (u <= knots_[degree_]) return degree_;
  int lo = degree_, hi = n + 1;
  int mid = (lo + hi) / 2;
  while (u < knots_[mid] || u >= knots_[mid + 1]) {
    if (u < knots_[mid])
      hi = mid;
    else
      lo = mid;
    mid = (lo + hi) / 2;
  }
  return mid;
}

// Piegl & Tiller, algorithm A2.3 (basis functions and derivatives).
Eigen::MatrixXd BsplineBasis1d::ders_basis(double u, int order) const {
  const int p = degree_;
  const int span = find_span(u);
  const int nd = std::min(order, p);

  Eigen::MatrixXd ndu(p + 1, p + 1);
  Eigen::VectorXd left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left(j) = u - knots_[span + 1 - j];
    right(j) = knots_[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right(r + 1) + left(j - r);
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    ndu(j, j) = saved;
  }

  Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(order + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }

  double factor = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) ders(k, j) *= factor;
    factor *= (p - k);
  }
  return ders;
}

std::vector<double> BsplineBasis1d::greville() const {
  const int n = num_basis();
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 1; k <= degree_; ++k) s += knots_[i + k];
    g[i] = degree_ > 0 ? s / degree_ : knots_[i];
  }
  return g;
}

BsplineBasis1d BsplineBasis1d::insert_knot(double u, double tol) const {
  for (double k : knots_)
    if (std::abs(k - u) <= tol) return *this;
  std::vector<double> knots = knots_;
  knots.insert(std::upper_bound(knots.begin(), knots.end(), u), u);
  return BsplineBasis1d(degree_, std::move(knots));
}

BsplineBasis1d BsplineBasis1d::with_knot_multiplicity(double u, int multiplicity,
                                                      double tol) const {
  double value = u;
  int present = 0;
  for (double k : knots_) {
    if (std::abs(k - u) <= tol) {
      value = k;  // reuse the existing knot value instead of creating a sliver
      ++present;
    }
  }
  if (present >= multiplicity) return *this;
  std::vector<double> knots = knots_;
  for (int i = present; i < multiplicity; ++i)
    knots.insert(std::upper_bound(knots.begin(), knots.end(), value), value);
  return BsplineBasis1d(degree_, std::move(knots));
}

std::vector<double> BsplineBasis1d::breakpoints() const {
  std::vector<double> b;
  for (size_t i = 0; i + 1 < knots_.size(); ++i) {
    if (b.empty() || knots_[i] > b.back()) b.push_back(knots_[i]);
  }
  if (knots_.back() > b.back()) b.push_back(knots_.back());
  return b;
}

NurbsPatch::NurbsPatch(BsplineBasis1d basis_xi, BsplineBasis1d basis_eta, double length,
                       double width)
    : bx_(std::move(basis_xi)), by_(std::move(basis_eta)), length_(length), width_(width) {
  if (!(length_ > 0) || !(width_ > 0)) throw ArgumentError("patch extents must be positive");
  weights_ = Eigen::VectorXd::Ones(num_ctrl());
}

Eigen::Vector2d NurbsPatch::ctrl_point(int i, int j) const {
  const auto gx = bx_.greville();
  const auto gy = by_.greville();
  return {length_ * gx[i], width_ * gy[j]};
}

std::vector<PatchElement> NurbsPatch::elements() const {
  const auto bxp = bx_.breakpoints();
  const auto byp = by_.breakpoints();
  std::vector<PatchElement> els;
  els.reserve((bxp.size() - 1) * (byp.size() - 1));
  for (size_t i = 0; i + 1 < bxp.size(); ++i)
    for (size_t j = 0; j + 1 < byp.size(); ++j)
      els.push_back({bxp[i], bxp[i + 1], byp[j], byp[j + 1]});
  return els;
}

void NurbsPatch::eval_basis_local(double xi, double eta, int order, std::vector<int>& global,
                                  Eigen::MatrixXd& ders) const {
  if (xi < 0.0 || xi > 1.0 || eta < 0.0 || eta > 1.0)
    throw DomainError("parametric point outside [0,1]^2");
  const int p = bx_.degree(), q = by_.degree();
  const int span_x = bx_.find_span(xi), span_y = by_.find_span(eta);
  const Eigen::MatrixXd dx = bx_.ders_basis(xi, order);
  const Eigen::MatrixXd dy = by_.ders_basis(eta, order);

  // Affine geometric map x = L xi, y = W eta.
  const double ix = 1.0 / length_, iy = 1.0 / width_;

  const int nloc = (p + 1) * (q + 1);
  global.resize(nloc);
  ders.resize(6, nloc);
  int c = 0;
  for (int a = 0; a <= p; ++a) {
    const int gi = span_x - p + a;
    for (int b = 0; b <= q; ++b, ++c) {
      const int gj = span_y - q + b;
      global[c] = ctrl_index(gi, gj);
      ders(kDerN, c) = dx(0, a) * dy(0, b);
      ders(kDerX, c) = dx(1, a) * dy(0, b) * ix;
      ders(kDerY, c) = dx(0, a) * dy(1, b) * iy;
      if (order >= 2) {
        ders(kDerXX, c) = dx(2, a) * dy(0, b) * ix * ix;
        ders(kDerYY, c) = dx(0, a) * dy(2, b) * iy * iy;
        ders(kDerXY, c) = dx(1, a) * dy(1, b) * ix * iy;
      } else {
        ders(kDerXX, c) = ders(kDerYY, c) = ders(kDerXY, c) = 0.0;
      }
    }
  }
}

BasisEval NurbsPatch::eval_basis(double xi, double eta, int order) const {
  std::vector<int> global;
  Eigen::MatrixXd local;
  eval_basis_local(xi, eta, order, global, local);

  BasisEval out;
  const int n = num_ctrl();
  out.n = Eigen::VectorXd::Zero(n);
  out.dx = Eigen::VectorXd::Zero(n);
  out.dy = Eigen::VectorXd::Zero(n);
  out.dxx = Eigen::VectorXd::Zero(n);
  out.dyy = Eigen::VectorXd::Zero(n);
  out.dxy = Eigen::VectorXd::Zero(n);
  for (size_t c = 0; c < global.size(); ++c) {
    const int g = global[c];
    out.n(g) = local(kDerN, c);
    out.dx(g) = local(kDerX, c);
    out.dy(g) = local(kDerY, c);
    out.dxx(g) = local(kDerXX, c);
    out.dyy(g) = local(kDerYY, c);
    out.dxy(g) = local(kDerXY, c);
  }
  return out;
}

NurbsPatch build_patch(const DeviceDimensions& dims, std::pair<int, int> degrees,
                       std::pair<int, int> elements) {
  const auto [p, q] = degrees;
  const auto [nx, ny] = elements;
  if (p < 2 || q < 2)
    throw ContinuityError("plate operator needs C1 basis: degrees must be >= 2");
  if (nx < 2 || ny < 2) throw ArgumentError("need at least 2 elements per direction");

  BsplineBasis1d bx = BsplineBasis1d::uniform_open(p, nx);
  double xi_interface = dims.piezo_length / dims.length;
  for (double b : bx.breakpoints()) {
    if (std::abs(b - xi_interface) < kInterfaceSnapTol) {
      xi_interface = b;
      break;
    }
  }
  if (xi_interface > 0.0 && xi_interface < 1.0)
    bx = bx.with_knot_multiplicity(xi_interface, p - 1);
  BsplineBasis1d by = BsplineBasis1d::uniform_open(q, ny);
  return NurbsPatch(std::move(bx), std::move(by), dims.length, dims.width);
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw ArgumentError("quadrature order must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  // Newton iteration on Legendre polynomials, symmetric roots.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

}  // namespace peh
