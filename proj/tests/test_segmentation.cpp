#include <cstring>

#include "doctest.h"
#include "error.hpp"
#include "segmentation.hpp"

using namespace slc;
using namespace slc::seg;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

Mask from_rows(std::initializer_list<const char*> rows) {
  const std::size_t h = rows.size(), w = std::strlen(*rows.begin());
  Mask m(h, w);
  std::size_t y = 0;
  for (const char* r : rows) {
    for (std::size_t x = 0; x < w; ++x) m.at(y, x) = r[x] == '#';
    ++y;
  }
  return m;
}

}  // namespace

TEST_CASE("dice") {
  const Mask a = from_rows({"##..", "##..", "....", "...."});
  const Mask b = from_rows({".##.", ".##.", "....", "...."});
  CHECK(dice(a, a) == 1.0);
  CHECK(dice(a, b) == doctest::Approx(2.0 * 2 / 8));
  CHECK(dice(Mask(4, 4), Mask(4, 4)) == 1.0);
  CHECK(dice(a, Mask(4, 4)) == 0.0);
  CHECK(code_of([&] { dice(a, Mask(3, 4)); }) == ErrorCode::Shape);
}

TEST_CASE("largest component uses 4-connectivity") {
  const Mask m = from_rows({"##...", "##...", "..#..", "...##", "...##"});
  // The diagonal touch does not join the blobs; the first 4-block wins the tie.
  CHECK(largest_component(m) == from_rows({"##...", "##...", ".....", ".....", "....."}));
  const Mask big = from_rows({"#....", ".....", "..###", "..###", "....."});
  CHECK(largest_component(big) == from_rows({".....", ".....", "..###", "..###", "....."}));
  CHECK(largest_component(Mask(3, 3)).count() == 0);
}

TEST_CASE("threshold segmentation recovers dark synthetic lesions") {
  DiscOptions opt;
  opt.size = 64;
  opt.noise = 6;
  SeededRng rng(1);
  double total = 0.0;
  for (int i = 0; i < 10; ++i) {
    const SegSample s = synthetic_disc(opt, rng);
    const Mask m = threshold_segment(s.image, {}, 128, true);
    total += dice(m, s.mask);
  }
  CHECK(total / 10 > 0.9);

  // A uniform bright image has no dark lesion.
  CHECK(code_of([] { threshold_segment(Image(8, 8, 3, 250), {}, 128, true); }) == ErrorCode::Empty);
}

TEST_CASE("synthetic discs are reproducible") {
  const auto a = synthetic_discs(4, {}, SeededRng(5));
  const auto b = synthetic_discs(4, {}, SeededRng(5));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].mask == b[i].mask);
    CHECK(a[i].mask.count() > 0);
  }
  CHECK(a[0].image != a[1].image);
}

TEST_CASE("predict_mask checks sizes") {
  UNetConfig cfg{1, 2, 8, 3};
  const auto net = build_unet(cfg);
  SeededRng rng(2);
  const auto w = nn::init_weights(net, rng);
  CHECK(predict_mask(net, w, Image(8, 8, 3, 100)).height == 8);
  CHECK(code_of([&] { predict_mask(net, w, Image(16, 16, 3, 100)); }) == ErrorCode::Shape);
  UNetConfig gray{1, 2, 8, 1};
  const auto gnet = build_unet(gray);
  const auto gw = nn::init_weights(gnet, rng);
  CHECK(predict_mask(gnet, gw, Image(8, 8, 3, 100)).width == 8);
}

TEST_CASE("small U-Net learns discs") {
  UNetConfig cfg{2, 4, 16, 3};
  DiscOptions opt;
  opt.size = 16;
  opt.min_radius = 0.25;
  const auto train_set = synthetic_discs(16, opt, SeededRng(3));
  const auto holdout = synthetic_discs(6, opt, SeededRng(4));
  UNetTrainOptions o;
  o.epochs = 8;
  o.seed = 1;
  const auto net = build_unet(cfg);
  const auto r = train_unet(net, cfg, train_set, holdout, o);
  REQUIRE(r.dice_history.size() == 9);
  REQUIRE(r.loss_history.size() == 8);
  CHECK(r.loss_history.back() < r.loss_history.front());
  CHECK(r.dice_history.back() > r.dice_history.front());

  // Same options, same weights.
  const auto again = train_unet(net, cfg, train_set, holdout, o);
  CHECK(again.weights.bit_identical(r.weights));
}

TEST_CASE("threshold segmentation of a bright disc on a dark field") {
  DiscOptions opt;
  opt.size = 64;
  opt.bright_lesion = true;
  opt.ellipticity = 0;
  opt.noise = 0;
  SeededRng rng(11);
  for (int i = 0; i < 5; ++i) {
    const SegSample s = synthetic_disc(opt, rng);
    const Mask m = threshold_segment(s.image, {}, 128, false);
    std::size_t differ = 0;
    for (std::size_t k = 0; k < m.bits.size(); ++k) differ += m.bits[k] != s.mask.bits[k];
    CHECK(differ <= m.bits.size() * 2 / 100);
  }
  CHECK(code_of([] { threshold_segment(Image(8, 8, 3, 5), {}, 128, false); }) == ErrorCode::Empty);
  const Mask full = threshold_segment(Image(8, 8, 3, 250), {}, 128, false);
  CHECK(full.count() == 64);
}

TEST_CASE("U-Net structure") {
  UNetConfig one{1, 4, 8, 3};
  std::size_t pools = 0, ups = 0;
  for (const auto& l : build_unet(one).layers()) {
    pools += l.kind == nn::LayerKind::MaxPool2;
    ups += l.kind == nn::LayerKind::Upsample2;
  }
  CHECK(pools == 1);
  CHECK(ups == 1);

  // depth 3, base 8, RGB: encoder 3-8-8 / 8-16-16 / 16-32-32, bottleneck
  // 32-64-64, decoder (64+32)-32-32 / (32+16)-16-16 / (16+8)-8-8, 1x1 head.
  auto conv = [](std::size_t ci, std::size_t co) { return ci * co * 9 + co; };
  const std::size_t expected = conv(3, 8) + conv(8, 8) + conv(8, 16) + conv(16, 16) +
                               conv(16, 32) + conv(32, 32) + conv(32, 64) + conv(64, 64) +
                               conv(96, 32) + conv(32, 32) + conv(48, 16) + conv(16, 16) +
                               conv(24, 8) + conv(8, 8) + (8 + 1);
  CHECK(build_unet(UNetConfig{}).parameter_count() == expected);
  CHECK(build_unet(UNetConfig{}).output_shape() == Shape{1, 64, 64});
}

TEST_CASE("U-Net training edge cases") {
  UNetConfig cfg{1, 4, 16, 3};
  DiscOptions opt;
  opt.size = 16;
  opt.min_radius = 0.25;
  const auto discs = synthetic_discs(4, opt, SeededRng(12));
  const auto net = build_unet(cfg);
  UNetTrainOptions o;
  o.epochs = 0;
  o.seed = 3;
  const auto r = train_unet(net, cfg, discs, discs, o);
  CHECK(r.dice_history.size() == 1);
  CHECK(r.loss_history.empty());
  SeededRng init = SeededRng(3).derive(0);
  CHECK(r.weights.bit_identical(nn::init_weights(net, init)));

  o.epochs = 3;
  CHECK(train_unet(net, cfg, discs, discs, o).dice_history ==
        train_unet(net, cfg, discs, discs, o).dice_history);
}

TEST_CASE("U-Net fits its own training disc") {
  UNetConfig cfg{2, 4, 16, 3};
  DiscOptions opt;
  opt.size = 16;
  opt.min_radius = 0.3;
  const auto one = synthetic_discs(1, opt, SeededRng(13));
  UNetTrainOptions o;
  o.epochs = 150;
  o.batch_size = 1;
  o.seed = 4;
  const auto net = build_unet(cfg);
  const auto r = train_unet(net, cfg, one, one, o);
  const Mask m = predict_mask(net, r.weights, one[0].image);
  CHECK(m.height == 16);
  for (auto b : m.bits) CHECK((b == 0 || b == 1));
  CHECK(dice(m, one[0].mask) > 0.95);
}
