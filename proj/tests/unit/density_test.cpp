#include <cmath>
#include <vector>

#include "doctest.h"
#include "dmcrop/density.hpp"
#include "dmcrop/error.hpp"
#include "support.hpp"

namespace dmcrop {
namespace {

KernelSpec fixed(double sigma) { return KernelSpec{FixedKernel{sigma}, kDefaultTruncationSigmas}; }

TEST_CASE("single object matches the brute-force Gaussian") {
  const ImageSize size{60, 70};
  for (double sigma : {1.0, 2.5, 4.0, 7.3}) {
    const std::vector<Annotation> anns{testing::annotation(1, 1, 1, {20.2, 13.9, 10, 12})};
    const DensityRaster d = render_density(size, anns, fixed(sigma));
    const auto ref = testing::gaussian_reference(size, 25, 19, sigma, kDefaultTruncationSigmas);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(d.values()[i] - ref[i]));
    }
    CHECK(worst < 1e-7);
  }
}

TEST_CASE("interior objects integrate to one each") {
  testing::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const double sigma = testing::uniform(rng, 1, 6);
    std::vector<Annotation> anns;
    const int n = testing::uniform_int(rng, 1, 15);
    for (int i = 0; i < n; ++i) {
      anns.push_back(testing::annotation(i + 1, 1, 1,
                                         {testing::uniform(rng, 30, 90),
                                          testing::uniform(rng, 30, 90), 4, 4}));
    }
    const DensityRaster d = render_density({128, 128}, anns, fixed(sigma));
    CHECK(testing::raster_sum(d) == doctest::Approx(n).epsilon(1e-6));
  }
}

TEST_CASE("mass outside the image is lost") {
  const std::vector<Annotation> anns{testing::annotation(1, 1, 1, {0, 0, 1, 1})};
  const DensityRaster d = render_density({50, 50}, anns, fixed(3.0));
  const double s = testing::raster_sum(d);
  CHECK(s < 0.5);
  CHECK(s > 0.2);
}

TEST_CASE("class-wise sigma is half the mean diagonal") {
  CategoryStats stats;
  stats.per_category[4] = ScaleStats{30.0, 40.0, 2};
  CHECK(sigma_classwise(stats, 4) == 25.0);
  CHECK_THROWS_AS(sigma_classwise(stats, 5), Error);
  stats.per_category[6] = ScaleStats{0.0, 40.0, 1};
  CHECK_THROWS_AS(sigma_classwise(stats, 6), Error);
}

TEST_CASE("class-wise kernel uses the category sigma") {
  CategoryStats stats;
  stats.per_category[1] = ScaleStats{6.0, 8.0, 1};  // sigma 5
  const std::vector<Annotation> anns{testing::annotation(1, 1, 1, {40, 40, 6, 8})};
  const DensityRaster a = render_density({90, 90}, anns, KernelSpec{ClassWiseKernel{stats}, 4.0});
  const DensityRaster b = render_density({90, 90}, anns, fixed(5.0));
  CHECK(a == b);
}

TEST_CASE("adaptive sigma is beta times the mean neighbour distance") {
  const std::vector<Point2> c{{0, 0}, {3, 4}, {6, 8}, {0, 10}};
  CHECK(sigma_adaptive(c, 0, 0.3, 2) == doctest::Approx(0.3 * (5.0 + 10.0) / 2.0));
  CHECK(sigma_adaptive(c, 1, 1.0, 1) == doctest::Approx(5.0));
  CHECK_THROWS_AS(sigma_adaptive(std::vector<Point2>{{0, 0}}, 0, 0.3, 1), Error);
  CHECK_THROWS_AS(sigma_adaptive(c, 0, 0.3, 4), Error);
}

TEST_CASE("adaptive kernel falls back for isolated or coincident objects") {
  const AdaptiveKernel mode{0.3, 3, 4.0};
  const std::vector<Annotation> one{testing::annotation(1, 1, 1, {40, 40, 4, 4})};
  CHECK(render_density({100, 100}, one, KernelSpec{mode, 4.0}) ==
        render_density({100, 100}, one, fixed(4.0)));
  const std::vector<Annotation> twin{testing::annotation(1, 1, 1, {40, 40, 4, 4}),
                                     testing::annotation(2, 1, 1, {40, 40, 4, 4})};
  CHECK(render_density({100, 100}, twin, KernelSpec{mode, 4.0}) ==
        render_density({100, 100}, twin, fixed(4.0)));
}

TEST_CASE("rendering rejects bad input") {
  CHECK_THROWS_AS(render_density({0, 10}, {}, fixed(1)), Error);
  const std::vector<Annotation> anns{testing::annotation(1, 1, 1, {1, 1, 1, 1})};
  CHECK_THROWS_AS(render_density({10, 10}, anns, fixed(0)), Error);
  CHECK_THROWS_AS(render_density({10, 10}, anns, KernelSpec{ClassWiseKernel{}, 4.0}), Error);
}

TEST_CASE("bicubic upsampling keeps source samples at aligned positions") {
  testing::Rng rng(8);
  const DensityRaster src = testing::random_density(rng, 7, 9, 0.0);
  const DensityRaster up = upsample_bicubic(src, 3);
  REQUIRE(up.size() == ImageSize{21, 27});
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 9; ++c) CHECK(up(3 * r + 1, 3 * c + 1) == src(r, c));
  }
}

TEST_CASE("bicubic upsampling reproduces an interior ramp") {
  DensityRaster src(4, 12);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 12; ++c) src(r, c) = static_cast<float>(c);
  }
  const DensityRaster up = upsample_bicubic(src, ImageSize{8, 24});
  for (int c = 4; c < 20; ++c) {
    const double pos = (c + 0.5) / 2.0 - 0.5;
    CHECK(up(3, c) == doctest::Approx(pos).epsilon(1e-6));
  }
}

TEST_CASE("bicubic upsampling never goes negative and rejects shrinking") {
  DensityRaster spike(5, 5, 0.0f);
  spike(2, 2) = 1.0f;
  const DensityRaster up = upsample_bicubic(spike, 4);
  for (float v : up.values()) CHECK(v >= 0.0f);
  CHECK(upsample_bicubic(spike, 1) == spike);
  CHECK_THROWS_AS(upsample_bicubic(spike, ImageSize{4, 5}), Error);
  CHECK_THROWS_AS(upsample_bicubic(spike, 0), Error);
}

TEST_CASE("density error terms") {
  const DensityRaster p(1, 4, std::vector<float>{1.0f, 0.0f, 0.5f, 0.0f});
  const DensityRaster g(1, 4, std::vector<float>{0.0f, 0.0f, 0.0f, 1.0f});
  const DensityError e = density_error(p, g, 2);
  CHECK(e.loss == doctest::Approx((1.0 + 0.25 + 1.0) / 4.0));
  CHECK(e.loss_per_pixel == doctest::Approx(e.loss / 4.0));
  CHECK(e.mae == doctest::Approx(2.5 / 4.0));
  CHECK(e.count_error == doctest::Approx(0.5));
  CHECK_THROWS_AS(density_error(p, DensityRaster(2, 2), 1), Error);
  CHECK_THROWS_AS(density_error(p, g, 0), Error);
}

}  // namespace
}  // namespace dmcrop
