#include "mdfe/predicates.hpp"

#include <cmath>
#include <limits>

#include <gmpxx.h>

namespace mdfe::predicates {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon() * 0.5;
// Forward error bounds of the plain floating-point evaluation (Shewchuk's stage A).
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kInCircleBound = (10.0 + 96.0 * kEps) * kEps;

int sign(const mpq_class& v) { return sgn(v); }

int orient_exact(Point2 a, Point2 b, Point2 c)
{
  const mpq_class ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
  const mpq_class det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
  return sign(det);
}

int incircle_exact(Point2 a, Point2 b, Point2 c, Point2 d)
{
  const mpq_class dx(d.x), dy(d.y);
  const mpq_class adx = mpq_class(a.x) - dx, ady = mpq_class(a.y) - dy;
  const mpq_class bdx = mpq_class(b.x) - dx, bdy = mpq_class(b.y) - dy;
  const mpq_class cdx = mpq_class(c.x) - dx, cdy = mpq_class(c.y) - dy;
  const mpq_class alift = adx * adx + ady * ady;
  const mpq_class blift = bdx * bdx + bdy * bdy;
  const mpq_class clift = cdx * cdx + cdy * cdy;
  const mpq_class det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) + clift * (adx * bdy - bdx * ady);
  return sign(det);
}

} // namespace

int orient2d(Point2 a, Point2 b, Point2 c)
{
  const double detleft = (a.x - c.x) * (b.y - c.y);
  const double detright = (a.y - c.y) * (b.x - c.x);
  const double det = detleft - detright;
  const double bound = kOrientBound * (std::fabs(detleft) + std::fabs(detright));
  if (det > bound)
    return 1;
  if (-det > bound)
    return -1;
  return orient_exact(a, b, c);
}

int incircle(Point2 a, Point2 b, Point2 c, Point2 d)
{
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;

  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double alift = adx * adx + ady * ady;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double blift = bdx * bdx + bdy * bdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double clift = cdx * cdx + cdy * cdy;

  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::fabs(bdxcdy) + std::fabs(cdxbdy)) * alift +
                           (std::fabs(cdxady) + std::fabs(adxcdy)) * blift +
                           (std::fabs(adxbdy) + std::fabs(bdxady)) * clift;
  const double bound = kInCircleBound * permanent;
  if (det > bound)
    return 1;
  if (-det > bound)
    return -1;
  return incircle_exact(a, b, c, d);
}

} // namespace mdfe::predicates
