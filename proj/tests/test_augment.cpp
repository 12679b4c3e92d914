#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "augment.hpp"
#include "doctest.h"
#include "error.hpp"
#include "image_io.hpp"
#include "support.hpp"

using namespace slc;
using namespace slc::augment;

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

Image noise(std::size_t h, std::size_t w, std::uint64_t seed) {
  SeededRng rng(seed);
  Image img(h, w, 3);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Smooth image so bilinear round trips stay close.
Image smooth(std::size_t h, std::size_t w) {
  Image img(h, w, 3);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      img.at(y, x, 0) = static_cast<std::uint8_t>(x * 255 / (w - 1));
      img.at(y, x, 1) = static_cast<std::uint8_t>(y * 255 / (h - 1));
      img.at(y, x, 2) = 128;
    }
  return img;
}

}  // namespace

TEST_CASE("flips are involutions") {
  const Image img = noise(13, 17, 1);
  CHECK(apply_augment(apply_augment(img, AugmentOp::flip_h()), AugmentOp::flip_h()) == img);
  CHECK(apply_augment(apply_augment(img, AugmentOp::flip_v()), AugmentOp::flip_v()) == img);
  const Image f = apply_augment(img, AugmentOp::flip_h());
  CHECK(f.at(3, 0, 1) == img.at(3, 16, 1));
  CHECK(f != img);
}

TEST_CASE("rotate 360 is identity within one level") {
  const Image img = smooth(32, 40);
  const Image r = apply_augment(img, AugmentOp::rotate(360));
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    CHECK(std::abs(int(r.pixels[i]) - int(img.pixels[i])) <= 1);
  // Also on noise, where any resampling error would show.
  const Image n = noise(20, 20, 2);
  const Image rn = apply_augment(n, AugmentOp::rotate(360));
  for (std::size_t i = 0; i < n.pixels.size(); ++i)
    CHECK(std::abs(int(rn.pixels[i]) - int(n.pixels[i])) <= 1);
}

TEST_CASE("cutout zeroes exactly the hole") {
  const Image img = noise(30, 30, 3);
  const Rect hole{5, 7, 10, 4};
  const Image out = apply_augment(img, AugmentOp::cutout(hole));
  for (std::size_t y = 0; y < 30; ++y)
    for (std::size_t x = 0; x < 30; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const bool inside = x >= 5 && x < 15 && y >= 7 && y < 11;
        CHECK(out.at(y, x, c) == (inside ? 0 : img.at(y, x, c)));
      }
}

TEST_CASE("photometric identities") {
  const Image img = noise(9, 11, 4);
  CHECK(apply_augment(img, AugmentOp::contrast(1.0)) == img);
  CHECK(apply_augment(img, AugmentOp::brightness(0.0)) == img);
  CHECK(apply_augment(img, AugmentOp::scale(1.0)) == img);
  CHECK(apply_augment(img, AugmentOp::shear(0.0)) == img);
  CHECK(apply_augment(img, AugmentOp::crop({0, 0, 11, 9})) == img);
}

TEST_CASE("ops keep dims and are deterministic") {
  const Image img = noise(24, 31, 5);
  SeededRng rng(6);
  const AugmentRanges ranges;
  for (AugmentKind k : {AugmentKind::Rotate, AugmentKind::Scale, AugmentKind::FlipH,
                        AugmentKind::FlipV, AugmentKind::Shear, AugmentKind::Contrast,
                        AugmentKind::Brightness, AugmentKind::Crop, AugmentKind::Cutout}) {
    for (int t = 0; t < 5; ++t) {
      const AugmentOp op = draw_op(k, ranges, rng, 24, 31);
      const Image a = apply_augment(img, op);
      CHECK(a.height == 24);
      CHECK(a.width == 31);
      CHECK(a == apply_augment(img, op));
      Mask m(24, 31, 1);
      const Mask am = apply_augment(m, op);
      CHECK(am.height == 24);
      CHECK(am.width == 31);
    }
  }
}

TEST_CASE("invalid ops") {
  const Image img = noise(10, 10, 7);
  CHECK(code_of([&] { apply_augment(img, AugmentOp::scale(0)); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { apply_augment(img, AugmentOp::contrast(-1)); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { apply_augment(img, AugmentOp::cutout({8, 8, 5, 5})); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { apply_augment(img, AugmentOp::crop({0, 0, 0, 5})); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { apply_augment(img, AugmentOp::rotate(NAN)); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("op chain serialization round-trips") {
  const OpChain chain = {AugmentOp::rotate(-12.5), AugmentOp::flip_h(), AugmentOp::crop({1, 2, 30, 40}),
                         AugmentOp::contrast(1.1), AugmentOp::cutout({0, 0, 3, 3})};
  const std::string s = serialize_chain(chain);
  CHECK(s.find("rotate:") == 0);
  CHECK(s.find("|flip_h|") != std::string::npos);
  CHECK(s.find("crop:1,2,30,40") != std::string::npos);
  CHECK(parse_chain(s) == chain);
  CHECK(parse_chain("").empty());
  CHECK(code_of([] { parse_chain("spin:3"); }) == ErrorCode::Format);
  CHECK(code_of([] { parse_chain("rotate:abc"); }) == ErrorCode::Format);

  SeededRng rng(8);
  for (int t = 0; t < 100; ++t) {
    const OpChain c = draw_chain({}, rng, 64, 48);
    CHECK(c.size() >= 1);
    CHECK(c.size() <= 3);
    CHECK(parse_chain(serialize_chain(c)) == c);
  }
}

TEST_CASE("geometric ops move masks, photometric ones do not") {
  Mask m(10, 10, 0);
  m.at(2, 1) = 1;
  CHECK(apply_augment(m, AugmentOp::flip_h()).at(2, 8) == 1);
  CHECK(apply_augment(m, AugmentOp::brightness(20)) == m);
  CHECK(apply_augment(m, AugmentOp::cutout({0, 0, 5, 5})) == m);
}

namespace {

const std::map<std::size_t, std::size_t> kIsicCounts = {
    {0, 4522}, {1, 12875}, {2, 3323}, {3, 867}, {4, 2624}, {5, 239}, {6, 253}, {7, 628}};

}  // namespace

TEST_CASE("balance plan on the ISIC 2019 class counts") {
  const BalancePlan plan = plan_balance(kIsicCounts, 2000, SeededRng(1));
  const std::size_t expected[] = {0, 0, 0, 1133, 0, 1761, 1747, 1372};
  REQUIRE(plan.classes.size() == 8);
  for (std::size_t c = 0; c < 8; ++c) {
    CHECK(plan.classes[c].synthesize == expected[c]);
    CHECK(plan.classes[c].items.size() == 2000);
    const std::size_t n = kIsicCounts.at(c);
    CHECK(plan.classes[c].synthesize == (n >= 2000 ? 0 : 2000 - n));
  }
  CHECK(plan.total() == 16000);

  const auto rows = plan_manifest(plan, {}, "aug");
  CHECK(rows.size() == 16000);
  std::map<std::string, std::size_t> per_class;
  std::map<std::string, std::string> src_class;
  for (const auto& r : rows) {
    ++per_class[r.class_name];
    auto [it, fresh] = src_class.emplace(r.src_id, r.class_name);
    CHECK(it->second == r.class_name);  // label follows the source
  }
  for (const auto& [c, n] : per_class) CHECK(n == 2000);

  // Over-target classes are subsampled without replacement.
  std::set<std::string> mcn;
  for (const auto& it : plan.classes[1].items) {
    CHECK(it.chain.empty());
    mcn.insert(it.src_id);
  }
  CHECK(mcn.size() == 2000);
}

TEST_CASE("balance plan edge cases") {
  const BalancePlan exact = plan_balance(std::map<std::size_t, std::size_t>{{0, 5}}, 5, SeededRng(2));
  CHECK(exact.classes[0].synthesize == 0);
  CHECK(exact.classes[0].items.size() == 5);
  CHECK(code_of([] { plan_balance(std::map<std::size_t, std::size_t>{{0, 0}}, 5, SeededRng(2)); }) ==
        ErrorCode::Empty);
  CHECK(code_of([] {
          plan_balance(std::map<std::size_t, std::vector<std::string>>{{0, {"a"}}, {1, {"a"}}}, 2,
                       SeededRng(2));
        }) == ErrorCode::Validation);

  // Same seed, same plan; different seed, different chains.
  const auto a = plan_manifest(plan_balance(kIsicCounts, 300, SeededRng(3)), {}, "x");
  const auto b = plan_manifest(plan_balance(kIsicCounts, 300, SeededRng(3)), {}, "x");
  const auto c = plan_manifest(plan_balance(kIsicCounts, 300, SeededRng(4)), {}, "x");
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("execute plan writes images, masks and a stable manifest") {
  TempDir dir("augment");
  std::map<std::size_t, std::vector<std::string>> ids;
  std::map<std::string, SourceRecord> sources;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 2 + 2 * c; ++i) {
      const std::string id = "c" + std::to_string(c) + "_" + std::to_string(i);
      const auto p = dir / (id + ".png");
      imaging::save_png(noise(16, 16, c * 10 + i), p);
      SourceRecord rec{p, std::nullopt};
      if (c == 0) {
        Mask m(16, 16, 0);
        m.at(8, 8) = 1;
        imaging::save_mask_png(m, dir / (id + "_m.png"));
        rec.mask = dir / (id + "_m.png");
      }
      sources[id] = rec;
      ids[c].push_back(id);
    }
  const BalancePlan plan = plan_balance(ids, 3, SeededRng(5), {}, 16, 16);
  const auto rows = execute_plan(plan, sources, dir / "out1");
  CHECK(rows.size() == 6);
  std::size_t synthesized = 0;
  for (const auto& r : rows) {
    CHECK(std::filesystem::exists(r.out_path));
    if (!r.op_chain.empty()) {
      ++synthesized;
      const Image im = imaging::load_image(r.out_path);
      CHECK(im.height == 16);
      if (r.class_name == "MLN") CHECK(std::filesystem::exists(companion_mask_path(r.out_path)));
    }
  }
  CHECK(synthesized == 1);

  write_manifest(rows, dir / "m1.csv");
  const auto rows2 = execute_plan(plan, sources, dir / "out1");
  write_manifest(rows2, dir / "m2.csv");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
  };
  CHECK(slurp(dir / "m1.csv") == slurp(dir / "m2.csv"));
  CHECK(slurp(dir / "m1.csv").rfind("out_path,src_id,class,op_chain,seed\n", 0) == 0);
  CHECK(read_manifest(dir / "m1.csv") == rows);

  std::map<std::string, SourceRecord> missing = sources;
  missing.erase("c0_0");
  try {
    execute_plan(plan, missing, dir / "out2");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
    CHECK(std::string(e.what()).find("c0_0") != std::string::npos);
  }
}
