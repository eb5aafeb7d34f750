#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <ostream>
#include <span>

namespace rtrack {

/// Axis-aligned box in pixel corner format. Zero-area boxes are valid.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  bool valid() const { return x2 >= x1 && y2 >= y1; }
  bool has_area() const { return x2 > x1 && y2 > y1; }

  static BBox from_xywh(double x, double y, double w, double h) { return {x, y, x + w, y + h}; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BBox& b) {
  return os << '[' << b.x1 << ',' << b.y1 << ',' << b.x2 << ',' << b.y2 << ']';
}

struct ImageDims {
  int width = 0;
  int height = 0;

  bool valid() const { return width > 0 && height > 0; }
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

using Matrix = Eigen::MatrixXd;

inline double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Entry (i, j) is iou(rows[i], cols[j]).
inline Matrix iou_matrix(std::span<const BBox> rows, std::span<const BBox> cols) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou(rows[i], cols[j]);
  return m;
}

inline BBox rescale(const BBox& b, const ImageDims& from, const ImageDims& to) {
  if (from == to) return b;
  const double sx = static_cast<double>(to.width) / from.width;
  const double sy = static_cast<double>(to.height) / from.height;
  return {b.x1 * sx, b.y1 * sy, b.x2 * sx, b.y2 * sy};
}

inline BBox clamp_to_image(const BBox& b, const ImageDims& dims) {
  const double w = dims.width;
  const double h = dims.height;
  return {std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h), std::clamp(b.x2, 0.0, w),
          std::clamp(b.y2, 0.0, h)};
}

}  // namespace rtrack
