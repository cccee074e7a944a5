#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "peps/procedural.hpp"
#include "peps/signals.hpp"

using namespace peps;

namespace {

std::filesystem::path tmpdir() {
  auto p = std::filesystem::temp_directory_path() / "peps_signals_test";
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("8-bit ppm round trip is exact") {
  ImageSignal img(9, 7);
  Rng rng(1);
  for (double& v : img.values)
    v = static_cast<double>(rng.below(256)) / 255.0;
  const auto path = (tmpdir() / "rt.ppm").string();
  save_image(path, img);
  ImageSignal back = load_image(path);
  REQUIRE(back.width == 9);
  REQUIRE(back.height == 7);
  REQUIRE(back.values == img.values);
  std::remove(path.c_str());
}

TEST_CASE("16-bit ppm input normalizes by 65535") {
  const auto path = (tmpdir() / "wide.ppm").string();
  std::ofstream out(path, std::ios::binary);
  out << "P6\n2 1\n65535\n";
  const unsigned char bytes[12] = {0xFF, 0xFF, 0x00, 0x00, 0x80, 0x00,
                                   0x00, 0x01, 0x3F, 0xFF, 0x00, 0x00};
  out.write(reinterpret_cast<const char*>(bytes), 12);
  out.close();
  ImageSignal img = load_image(path);
  REQUIRE(img.at(0, 0, 0) == Catch::Approx(1.0));
  REQUIRE(img.at(0, 0, 1) == Catch::Approx(0.0));
  REQUIRE(img.at(0, 0, 2) == Catch::Approx(32768.0 / 65535.0));
  REQUIRE(img.at(0, 1, 0) == Catch::Approx(1.0 / 65535.0));
  std::remove(path.c_str());
}

TEST_CASE("png round trip through libpng") {
  ImageSignal img = make_natural_image(11, 16);
  // Quantize to 8 bits first so the round trip is exact.
  for (double& v : img.values)
    v = std::round(v * 255.0) / 255.0;
  const auto path = (tmpdir() / "rt.png").string();
  save_image(path, img);
  ImageSignal back = load_image(path);
  REQUIRE(back.width == img.width);
  for (std::size_t i = 0; i < img.values.size(); ++i)
    REQUIRE(back.values[i] == Catch::Approx(img.values[i]).margin(1e-12));
  std::remove(path.c_str());
}

TEST_CASE("truncated and alien files are format errors") {
  const auto path = (tmpdir() / "bad.ppm").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n4 4\n255\n";
    out << "xx";  // raster far too short
  }
  REQUIRE_THROWS_AS(load_image(path), io_error);
  {
    std::ofstream out(path, std::ios::binary);
    out << "GIF89a....";
  }
  REQUIRE_THROWS_AS(load_image(path), io_error);
  REQUIRE_THROWS_AS(load_image((tmpdir() / "missing.ppm").string()), io_error);
  std::remove(path.c_str());
}

TEST_CASE("ground-truth sampling reproduces pixels and cell centers") {
  ImageSignal img(2, 2);
  // Channel 0 holds distinct values per pixel.
  img.at(0, 0, 0) = 0.1;
  img.at(0, 1, 0) = 0.3;
  img.at(1, 0, 0) = 0.5;
  img.at(1, 1, 0) = 0.9;
  SignalDataset data(img);
  double out[3];

  const double center00[2] = {0.25, 0.25};
  data.sample_ground_truth({center00, 2}, {out, 3});
  REQUIRE(out[0] == 0.1);

  const double mid[2] = {0.5, 0.5};
  data.sample_ground_truth({mid, 2}, {out, 3});
  REQUIRE(out[0] == Catch::Approx((0.1 + 0.3 + 0.5 + 0.9) / 4.0));

  const double beyond[2] = {2.0, -1.0};  // clamps to the border pixel
  data.sample_ground_truth({beyond, 2}, {out, 3});
  REQUIRE(out[0] == 0.3);
}

TEST_CASE("constant images sample constant everywhere") {
  ImageSignal img(8, 8);
  std::fill(img.values.begin(), img.values.end(), 0.77);
  SignalDataset data(img);
  Rng rng(2);
  double out[3];
  for (int i = 0; i < 50; ++i) {
    const double x[2] = {rng.uniform(), rng.uniform()};
    data.sample_ground_truth({x, 2}, {out, 3});
    for (double v : {out[0], out[1], out[2]})
      REQUIRE(v == Catch::Approx(0.77).margin(1e-12));
  }
}

TEST_CASE("trilinear volume sampling reproduces voxels and cell centers") {
  SdfVolume vol(2);
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x)
        vol.at(x, y, z) = static_cast<double>((z * 2 + y) * 2 + x);
  const double center0[3] = {0.25, 0.25, 0.25};
  REQUIRE(sample_volume(vol, {center0, 3}) == 0.0);
  const double mid[3] = {0.5, 0.5, 0.5};
  REQUIRE(sample_volume(vol, {mid, 3}) == Catch::Approx(3.5));
  const double corner[3] = {0.75, 0.75, 0.75};
  REQUIRE(sample_volume(vol, {corner, 3}) == 7.0);
}

TEST_CASE("coordinate sampling modes") {
  ImageSignal img(4, 4);
  SignalDataset data(img);
  Rng rng(3);
  std::vector<double> coords;
  data.sample_coordinates(rng, 0, coords);
  REQUIRE(coords.empty());
  data.sample_coordinates(rng, 64, coords);
  REQUIRE(coords.size() == 128);
  for (double c : coords) {
    // Pixel-center lattice of a 4-wide image: (i + 0.5) / 4.
    const double t = c * 4.0 - 0.5;
    REQUIRE(t == Catch::Approx(std::round(t)).margin(1e-12));
  }

  Rng rng_a(7), rng_b(7);
  std::vector<double> ca, cb;
  data.sample_coordinates(rng_a, 32, ca);
  data.sample_coordinates(rng_b, 32, cb);
  REQUIRE(ca == cb);

  SdfVolume vol(4);
  SignalDataset sdf(vol);
  sdf.sample_coordinates(rng, 16, coords);
  REQUIRE(coords.size() == 48);
  for (double c : coords) {
    REQUIRE(c >= 0.0);
    REQUIRE(c < 1.0);
  }
}

TEST_CASE("analytic sphere distances") {
  auto vol = analytic_sphere({0.5, 0.5, 0.5}, 0.25, 64);
  // Center voxel of a 64-grid is at 0.5 + half voxel; use the formulas.
  const double c = (31 + 0.5) / 64.0;
  const double expect_center =
      std::sqrt(3 * (c - 0.5) * (c - 0.5)) - 0.25;
  REQUIRE(vol.at(31, 31, 31) == Catch::Approx(expect_center).margin(1e-12));
  // Corner voxel (0,0,0).
  const double p = 0.5 / 64.0;
  const double expect_corner =
      std::sqrt(3 * (0.5 - p) * (0.5 - p)) - 0.25;
  REQUIRE(vol.at(0, 0, 0) == Catch::Approx(expect_corner).margin(1e-12));
  REQUIRE_THROWS_AS(analytic_sphere({0.5, 0.5, 0.5}, -1.0, 8),
                    std::invalid_argument);
}

TEST_CASE("sphere surface points sit at zero distance") {
  SdfSphere s{{0.5, 0.5, 0.5}, 0.25};
  REQUIRE(s(0.5, 0.5, 0.75) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(s(0.5, 0.5, 0.5) == Catch::Approx(-0.25));
  REQUIRE(s(0.0, 0.0, 0.0) ==
          Catch::Approx(std::sqrt(0.75) - 0.25).margin(1e-15));
}

TEST_CASE("analytic shapes satisfy the eikonal property") {
  Rng rng(5);
  SdfTorus torus{{0.5, 0.5, 0.5}, 0.3, 0.12};
  SdfBox box{{0.5, 0.5, 0.5}, {0.3, 0.25, 0.2}};
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double x = rng.uniform(0.05, 0.95), y = rng.uniform(0.05, 0.95),
                 z = rng.uniform(0.05, 0.95);
    auto grad_norm = [&](auto&& f) {
      const double gx = (f(x + h, y, z) - f(x - h, y, z)) / (2 * h);
      const double gy = (f(x, y + h, z) - f(x, y - h, z)) / (2 * h);
      const double gz = (f(x, y, z + h) - f(x, y, z - h)) / (2 * h);
      return std::sqrt(gx * gx + gy * gy + gz * gz);
    };
    // Keep clear of the medial axes (the shape centers/planes).
    if (std::fabs(torus(x, y, z)) < 0.25 &&
        std::hypot(x - 0.5, y - 0.5) > 0.05) {
      REQUIRE(grad_norm(torus) == Catch::Approx(1.0).margin(5e-2));
      ++checked;
    }
    if (box(x, y, z) > 0.02) {
      REQUIRE(grad_norm(box) == Catch::Approx(1.0).margin(5e-2));
      ++checked;
    }
  }
  REQUIRE(checked > 500);
}

TEST_CASE("volume round trip and format errors") {
  auto vol = analytic_torus({0.5, 0.5, 0.5}, 0.3, 0.12, 8);
  // Round the payload to f32 so the round trip is bit-exact.
  for (double& v : vol.values) v = static_cast<float>(v);
  const auto path = (tmpdir() / "t.sdfv").string();
  save_volume(path, vol);
  auto back = load_volume(path);
  REQUIRE(back.resolution == 8);
  REQUIRE(back.values == vol.values);

  // Byte-exact second write.
  const auto path2 = (tmpdir() / "t2.sdfv").string();
  save_volume(path2, back);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)),
                 std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)),
                 std::istreambuf_iterator<char>());
  REQUIRE(b1 == b2);

  SECTION("bad magic") {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.write("XXXX", 4);
    f.close();
    REQUIRE_THROWS_AS(load_volume(path), io_error);
  }
  SECTION("version 0 rejected") {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);
    const std::uint32_t v = 0;
    f.write(reinterpret_cast<const char*>(&v), 4);
    f.close();
    REQUIRE_THROWS_AS(load_volume(path), io_error);
  }
  SECTION("payload shorter than the header promises") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 10));
    out.close();
    REQUIRE_THROWS_AS(load_volume(path), io_error);
  }
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("texture sets stack name-sorted regardless of load order") {
  ImageSignal a(4, 4), b(4, 4), c(4, 4);
  std::fill(a.values.begin(), a.values.end(), 0.1);
  std::fill(b.values.begin(), b.values.end(), 0.5);
  std::fill(c.values.begin(), c.values.end(), 0.9);

  TextureSet s1, s2;
  s1.add("rough", c);
  s1.add("albedo", a);
  s1.add("height", b);
  s2.add("height", b);
  s2.add("albedo", a);
  s2.add("rough", c);
  REQUIRE(s1.layers.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    REQUIRE(s1.layers[i].name == s2.layers[i].name);
  REQUIRE(s1.layers[0].name == "albedo");
  REQUIRE(s1.value_dim() == 9);

  SignalDataset data(s1);
  double out[9];
  const double x[2] = {0.5, 0.5};
  data.sample_ground_truth({x, 2}, {out, 9});
  REQUIRE(out[0] == Catch::Approx(0.1));
  REQUIRE(out[3] == Catch::Approx(0.5));
  REQUIRE(out[6] == Catch::Approx(0.9));
}

TEST_CASE("texture manifest loading") {
  auto dir = tmpdir() / "texset";
  std::filesystem::create_directories(dir);
  ImageSignal img = make_test_texture_set(1, 8, 2).layers[0].image;
  save_image((dir / "albedo.ppm").string(), img);
  save_image((dir / "rough.ppm").string(), img);
  {
    std::ofstream m(dir / "layers.txt");
    m << "# two layers\nrough.ppm\nalbedo.ppm\n";
  }
  TextureSet set = load_texture_set(dir.string());
  REQUIRE(set.layers.size() == 2);
  REQUIRE(set.layers[0].name == "albedo");
  REQUIRE(set.layers[1].name == "rough");
  REQUIRE_THROWS_AS(load_texture_set((tmpdir() / "nosuch").string()),
                    io_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mismatched layer resolutions are rejected") {
  TextureSet set;
  set.add("a", ImageSignal(4, 4));
  REQUIRE_THROWS_AS(set.add("b", ImageSignal(8, 8)), config_error);
}
