#include "bswtv/synthetic.hpp"

#include "bswtv/error.hpp"

namespace bswtv {

GrayImage shapes_image(int size, double peak) {
  if (size < 32) throw InvalidArgument("shapes_image: size must be >= 32");
  const double s = static_cast<double>(size) / 64.0;
  GrayImage img(size, size, 0.2 * peak);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double y = (i + 0.5) / s;
      const double x = (j + 0.5) / s;
      // large rectangle, upper left
      if (x >= 6 && x < 28 && y >= 6 && y < 24) img(i, j) = 0.7 * peak;
      // ellipse, right
      const double ex = (x - 45.0) / 13.0;
      const double ey = (y - 20.0) / 9.0;
      if (ex * ex + ey * ey <= 1.0) img(i, j) = peak;
      // dark rectangle inside the ellipse
      if (x >= 41 && x < 49 && y >= 17 && y < 23) img(i, j) = 0.4 * peak;
      // vertical bars, bottom
      if (y >= 34 && y < 58 && x >= 6 && x < 34) {
        const int col = static_cast<int>(x - 6);
        if ((col / 3) % 2 == 0) img(i, j) = 0.55 * peak;
      }
      // small square, bottom right
      if (x >= 42 && x < 56 && y >= 40 && y < 54) img(i, j) = 0.85 * peak;
    }
  }
  return img;
}

}  // namespace bswtv
