#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace vplan;
using vtest::random_pose;
using vtest::random_unit;
using vtest::uniform;

TEST(SlicePose, RejectsBadInvariants) {
  EXPECT_THROW(SlicePose(Vec3::Zero(), Vec3(1, 0, 0), Vec3(0.05, 1, 0).normalized(), 1, 1, 10, 10, 6),
               InvariantViolation);
  EXPECT_THROW(SlicePose(Vec3::Zero(), Vec3(2, 0, 0), Vec3(0, 1, 0), 1, 1, 10, 10, 6), InvariantViolation);
  EXPECT_THROW(SlicePose(Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 1, 0), 0, 1, 10, 10, 6), InvariantViolation);
  EXPECT_THROW(SlicePose(Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 1, 0), 1, 1, 1, 10, 6), InvariantViolation);
  EXPECT_THROW(SlicePose(Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 1, 0), 1, 1, 10, 10, 0), InvariantViolation);
  EXPECT_NO_THROW(SlicePose(Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 1, 0), 1.5, 2.5, 2, 2, 6));
}

TEST(PoseToPlane, AxialAndSagittal) {
  Plane3D axial = pose_to_plane(vtest::axial_pose());
  EXPECT_EQ(axial.point, Vec3::Zero());
  EXPECT_NEAR((axial.normal - Vec3::UnitZ()).norm(), 0.0, 1e-15);

  SlicePose sag(Vec3::Zero(), Vec3::UnitY(), -Vec3::UnitZ(), 1, 1, 10, 10, 6);
  EXPECT_NEAR((pose_to_plane(sag).normal - Vec3(-1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(PoseToPlane, EveryPixelSatisfiesPlaneEquation) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    SlicePose pose = random_pose(rng);
    Plane3D plane = pose_to_plane(pose);
    for (int k = 0; k < 10; ++k) {
      Vec2 px(uniform(rng, -50, pose.cols() + 50), uniform(rng, -50, pose.rows() + 50));
      EXPECT_LT(std::abs(plane.signed_distance(image_to_patient(pose, px))), 1e-9);
    }
  }
}

TEST(ImageToPatient, ArithmeticCases) {
  EXPECT_EQ(image_to_patient(vtest::axial_pose(2.0), {0, 0}), Vec3::Zero());
  EXPECT_NEAR((image_to_patient(vtest::axial_pose(2.0), {3, 4}) - Vec3(6, 8, 0)).norm(), 0.0, 1e-15);
}

TEST(PatientToImage, ArithmeticCases) {
  ImagePoint p = patient_to_image(vtest::axial_pose(2.0), {6, 8, 5});
  EXPECT_NEAR(p.px.x(), 3.0, 1e-15);
  EXPECT_NEAR(p.px.y(), 4.0, 1e-15);
  EXPECT_NEAR(p.out_of_plane_mm, 5.0, 1e-15);
  EXPECT_NEAR(patient_to_image(vtest::axial_pose(2.0), {6, 8, 0}).out_of_plane_mm, 0.0, 1e-9);
}

TEST(Transforms, RoundTripsBothWays) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    SlicePose pose = random_pose(rng);
    Vec2 px(uniform(rng, -100, 400), uniform(rng, -100, 400));
    ImagePoint back = patient_to_image(pose, image_to_patient(pose, px));
    EXPECT_LT((back.px - px).norm(), 1e-9);
    EXPECT_LT(std::abs(back.out_of_plane_mm), 1e-9);

    Vec3 in_plane = image_to_patient(pose, {uniform(rng, 0, 300), uniform(rng, 0, 300)});
    EXPECT_LT((image_to_patient(pose, patient_to_image(pose, in_plane).px) - in_plane).norm(), 1e-9);
  }
}

TEST(IntersectPlanes, CanonicalAxes) {
  Line3D l = intersect_planes(Plane3D(Vec3::Zero(), Vec3::UnitZ()), Plane3D(Vec3::Zero(), Vec3::UnitX()));
  EXPECT_LT(l.point.norm(), 1e-15);
  EXPECT_NEAR(std::abs(l.direction.dot(Vec3::UnitY())), 1.0, 1e-15);
}

TEST(IntersectPlanes, ParallelThrows) {
  Plane3D p(Vec3(1, 2, 3), Vec3(0, 0, 1));
  EXPECT_THROW(intersect_planes(p, p), ParallelPlanes);
  EXPECT_THROW(intersect_planes(p, Plane3D(Vec3(0, 0, 7), Vec3(0, 0, -1))), ParallelPlanes);
  // Just above the tolerance still intersects.
  Vec3 tilted = Vec3(2e-8, 0, 1).normalized();
  EXPECT_NO_THROW(intersect_planes(p, Plane3D(Vec3::Zero(), tilted)));
}

TEST(IntersectPlanes, SubstitutionResidualAndSymmetry) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    Plane3D a(Vec3(uniform(rng, -100, 100), uniform(rng, -100, 100), uniform(rng, -100, 100)), random_unit(rng));
    Plane3D b(Vec3(uniform(rng, -100, 100), uniform(rng, -100, 100), uniform(rng, -100, 100)), random_unit(rng));
    if (a.normal.cross(b.normal).norm() < 1e-3) continue;
    Line3D l = intersect_planes(a, b);
    EXPECT_NEAR(l.direction.norm(), 1.0, 1e-12);
    for (int k = 0; k < 10; ++k) {
      Vec3 x = l.at(uniform(rng, -300, 300));
      EXPECT_LT(std::abs(a.signed_distance(x)), 1e-9);
      EXPECT_LT(std::abs(b.signed_distance(x)), 1e-9);
    }
    // The representative point is the closest one to the origin.
    EXPECT_LT(std::abs(l.point.dot(l.direction)), 1e-9);
    Line3D r = intersect_planes(b, a);
    EXPECT_NEAR(std::abs(r.direction.dot(l.direction)), 1.0, 1e-12);
    EXPECT_LT(l.distance(r.point), 1e-9);
  }
}

TEST(Line2D, CanonicalForm) {
  Line2D l = Line2D::canonical(-2, 0, 10);
  EXPECT_EQ(l.a, 1.0);
  EXPECT_EQ(l.b, 0.0);
  EXPECT_EQ(l.c, -5.0);
  Line2D m = Line2D::canonical(0, -3, 6);
  EXPECT_EQ(m.b, 1.0);
  EXPECT_EQ(m.c, -2.0);
  EXPECT_THROW(Line2D::canonical(0, 0, 1), InvariantViolation);
}

TEST(Line2D, RescalingGivesSameCanonicalTriple) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    double a = uniform(rng, -5, 5), b = uniform(rng, -5, 5), c = uniform(rng, -500, 500);
    double k = uniform(rng, 0.01, 100) * (i % 2 ? -1 : 1);
    Line2D p = Line2D::canonical(a, b, c), q = Line2D::canonical(k * a, k * b, k * c);
    EXPECT_NEAR(p.a, q.a, 1e-12);
    EXPECT_NEAR(p.b, q.b, 1e-12);
    EXPECT_NEAR(p.c, q.c, 1e-9);
    EXPECT_NEAR(p.a * p.a + p.b * p.b, 1.0, 1e-12);
    EXPECT_TRUE(p.a > 0 || (p.a == 0 && p.b > 0));
  }
}

TEST(Line3DToLine2D, YAxisInAxialPose) {
  Line2D l = line3d_to_line2d({Vec3::Zero(), Vec3::UnitY()}, vtest::axial_pose());
  EXPECT_NEAR(l.a, 1.0, 1e-15);
  EXPECT_NEAR(l.b, 0.0, 1e-15);
  EXPECT_NEAR(l.c, 0.0, 1e-15);
}

TEST(Line3DToLine2D, OffPlaneLineThrows) {
  EXPECT_THROW(line3d_to_line2d({Vec3(0, 0, 5), Vec3::UnitY()}, vtest::axial_pose()), LineNotInPlane);
}

TEST(Line3DToLine2D, BackSubstitution) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    SlicePose pose = random_pose(rng);
    Vec3 p = image_to_patient(pose, {uniform(rng, 0, 100), uniform(rng, 0, 100)});
    Vec3 in_plane_dir = (std::cos(uniform(rng, 0, 6.28)) * pose.row_dir() +
                         std::sin(uniform(rng, 0, 6.28)) * pose.col_dir()).normalized();
    Line3D line{p, in_plane_dir};
    Line2D l2 = line3d_to_line2d(line, pose);
    for (int k = 0; k < 10; ++k) {
      Vec2 px = l2.foot() + uniform(rng, -300, 300) * l2.direction();
      EXPECT_LT(line.distance(image_to_patient(pose, px)), 1e-6);
    }
  }
}

TEST(PlaneTrace, MatchesIntersectThenProject) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    SlicePose pose = random_pose(rng);
    Plane3D plane(image_to_patient(pose, {uniform(rng, 0, 50), uniform(rng, 0, 50)}) + 3.0 * random_unit(rng),
                  random_unit(rng));
    auto trace = plane_trace(plane, pose);
    ASSERT_TRUE(trace);
    Line2D ref = line3d_to_line2d(intersect_planes(plane, pose_to_plane(pose)), pose);
    EXPECT_NEAR(trace->a, ref.a, 1e-9);
    EXPECT_NEAR(trace->b, ref.b, 1e-9);
    EXPECT_NEAR(trace->c, ref.c, 1e-6);
  }
  EXPECT_FALSE(plane_trace(Plane3D(Vec3::Zero(), Vec3::UnitZ()), vtest::axial_pose()));
}

TEST(ClipLine, KnownCases) {
  auto seg = clip_line(Line2D::canonical(1, 0, -5), vtest::axial_pose());
  ASSERT_TRUE(seg);
  EXPECT_NEAR((seg->start - Vec2(5, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((seg->end - Vec2(5, 9)).norm(), 0.0, 1e-12);
  EXPECT_FALSE(clip_line(Line2D::canonical(1, 0, 3), vtest::axial_pose()));
  // On the border counts as inside.
  EXPECT_TRUE(clip_line(Line2D::canonical(1, 0, -9), vtest::axial_pose()));
  EXPECT_FALSE(clip_line(Line2D::canonical(1, 0, -9.01), vtest::axial_pose()));
}

namespace {

// Independent oracle: intersect the line with each rectangle edge and keep
// the two extreme hits along the line direction.
std::optional<Segment2D> clip_by_edges(const Line2D& l, int cols, int rows) {
  const double W = cols - 1.0, H = rows - 1.0, eps = 1e-9;
  std::vector<Vec2> hits;
  if (std::abs(l.b) > 1e-12)
    for (double x : {0.0, W}) {
      double y = -(l.a * x + l.c) / l.b;
      if (y >= -eps && y <= H + eps) hits.emplace_back(x, std::clamp(y, 0.0, H));
    }
  if (std::abs(l.a) > 1e-12)
    for (double y : {0.0, H}) {
      double x = -(l.b * y + l.c) / l.a;
      if (x >= -eps && x <= W + eps) hits.emplace_back(std::clamp(x, 0.0, W), y);
    }
  if (hits.empty()) return std::nullopt;
  Vec2 d = l.direction();
  auto by_t = [&](const Vec2& p, const Vec2& q) { return p.dot(d) < q.dot(d); };
  return Segment2D{*std::min_element(hits.begin(), hits.end(), by_t),
                   *std::max_element(hits.begin(), hits.end(), by_t)};
}

}  // namespace

TEST(ClipLine, MatchesEdgeEnumeration) {
  std::mt19937_64 rng(7);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    int cols = vtest::uniform_int(rng, 2, 300), rows = vtest::uniform_int(rng, 2, 300);
    double ang = uniform(rng, 0, 2 * kPi);
    Vec2 through(uniform(rng, -50, cols + 50), uniform(rng, -50, rows + 50));
    Line2D l = Line2D::canonical(std::cos(ang), std::sin(ang), -(std::cos(ang) * through.x() + std::sin(ang) * through.y()));
    auto got = clip_line(l, cols, rows);
    auto want = clip_by_edges(l, cols, rows);
    ASSERT_EQ(got.has_value(), want.has_value()) << "case " << i;
    if (!got) continue;
    ++hits;
    EXPECT_LT((got->start - want->start).norm(), 1e-9);
    EXPECT_LT((got->end - want->end).norm(), 1e-9);
    for (const Vec2& p : {got->start, got->end}) {
      EXPECT_LT(l.distance(p), 1e-6);
      EXPECT_GE(p.x(), -1e-6);
      EXPECT_LE(p.x(), cols - 1 + 1e-6);
      EXPECT_GE(p.y(), -1e-6);
      EXPECT_LE(p.y(), rows - 1 + 1e-6);
    }
  }
  EXPECT_GT(hits, 300);
}

TEST(SphericalAngles, FixedPoints) {
  EXPECT_LT((normal_from_angles({0, 0}) - Vec3::UnitZ()).norm(), 1e-15);
  EXPECT_LT((normal_from_angles({90, 0}) - Vec3::UnitX()).norm(), 1e-15);
  auto pole = angles_from_normal(Vec3::UnitZ());
  EXPECT_EQ(pole.theta, 0.0);
  EXPECT_EQ(pole.phi, 0.0);
  auto south = angles_from_normal(-Vec3::UnitZ());
  EXPECT_EQ(south.theta, 180.0);
  EXPECT_EQ(south.phi, 0.0);
}

TEST(SphericalAngles, RoundTrip) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    SphericalAngles a{uniform(rng, 1, 179), uniform(rng, 0, 360)};
    SphericalAngles b = angles_from_normal(normal_from_angles(a));
    EXPECT_LT(std::abs(a.theta - b.theta), 1e-9);
    double dphi = std::remainder(a.phi - b.phi, 360.0);
    EXPECT_LT(std::abs(dphi), 1e-9);
    EXPECT_GE(b.phi, 0.0);
    EXPECT_LT(b.phi, 360.0);
  }
}

TEST(MakeCenteredPose, CenterPixelLandsOnCenter) {
  Vec3 c(10, -4, 7);
  SlicePose p = make_centered_pose(c, Vec3(1, 1, 0), Vec3::UnitZ(), 31, 20, 1.5, 2.0, 7);
  EXPECT_LT((image_to_patient(p, p.center_pixel()) - c).norm(), 1e-12);
  EXPECT_NEAR(std::abs(p.normal().dot(Vec3(1, 1, 0).normalized())), 1.0, 1e-12);
  EXPECT_THROW(make_centered_pose(c, Vec3::UnitZ(), Vec3::UnitZ(), 10, 10, 1, 1, 1), DegenerateGeometry);
}
