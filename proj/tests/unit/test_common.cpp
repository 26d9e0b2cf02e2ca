#include <doctest.h>

#include <atomic>
#include <set>

#include "common/checksum.hpp"
#include "common/error.hpp"
#include "common/image.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"
#include "support/tempdir.hpp"

using namespace tilecurate;

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(42), b(42), c(mix_seed(42, 1));
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
  }
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(5) < 5);
  }
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  testing::TempDir dir;
  testing::write_file(dir / "f", "abc");
  CHECK(sha256_file(dir / "f") == sha256_hex(std::string_view("abc")));
}

TEST_CASE("parallel_for fills every slot once and rethrows") {
  for (int workers : {1, 3, 8}) {
    std::vector<int> out(1000, 0);
    parallel_for(out.size(), workers, [&](std::size_t i) { out[i] += static_cast<int>(i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i));
  }
  CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t i) {
                    if (i == 5) throw Error(ErrorKind::Io, "boom");
                  }),
                  Error);
}

TEST_CASE("png round trip and float conversion") {
  testing::TempDir dir;
  Rgb8Image img(5, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 17);
  write_png(dir / "a.png", img);
  CHECK(read_image(dir / "a.png") == img);
  CHECK(to_rgb8(to_float(img)) == img);
  CHECK_THROWS_AS(read_image(dir / "missing.png"), Error);
}

TEST_CASE("hsv helpers") {
  CHECK(hsv_saturation(1, 1, 1) == doctest::Approx(0.0));
  CHECK(hsv_saturation(1, 0, 0) == doctest::Approx(1.0));
  CHECK(hsv_hue(0, 0, 1) == doctest::Approx(240.0));
  CHECK(hsv_hue(0, 1, 0) == doctest::Approx(120.0));
}
