#pragma once

#include "mdfe/point.hpp"

namespace mdfe::predicates {

/// Sign of the orientation determinant: >0 if a, b, c turn counterclockwise,
/// <0 if clockwise, 0 if collinear. Exact for all double inputs.
int orient2d(Point2 a, Point2 b, Point2 c);

/// Sign of the in-circle determinant: >0 if d lies strictly inside the circle
/// through the counterclockwise triangle a, b, c; 0 if cocircular. Exact.
int incircle(Point2 a, Point2 b, Point2 c, Point2 d);

} // namespace mdfe::predicates
