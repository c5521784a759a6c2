#pragma once

#include "bswtv/image.hpp"

namespace bswtv {

// Piecewise-constant test target: an ellipse, two rectangles and a group of
// thin bars on a flat background, scaled so the brightest region equals
// `peak`. Side length must be at least 32.
GrayImage shapes_image(int size, double peak = 200.0);

}  // namespace bswtv
