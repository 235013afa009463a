#include <png.h>

#include <gtest/gtest.h>

#include <map>

#include "apd/imageio.hpp"
#include "test_util.hpp"

using namespace apd;
namespace fs = std::filesystem;

namespace {

void write_png_gray(const fs::path& path, int w, int h, const std::vector<unsigned char>& px) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = w;
    img.height = h;
    img.format = PNG_FORMAT_GRAY;
    ASSERT_TRUE(png_image_write_to_file(&img, path.c_str(), 0, px.data(), 0, nullptr));
}

}  // namespace

TEST(ImageIo, PgmExtremalValues) {
    const auto dir = testutil::scratch("pgm");
    testutil::spit(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\xff\x00", 4));
    const auto img = load_image(dir / "a.pgm");
    ASSERT_EQ(img.width, 2);
    ASSERT_EQ(img.height, 2);
    EXPECT_EQ(img.pixels, (std::vector<double>{0, 1, 1, 0}));
}

TEST(ImageIo, PngGray128) {
    const auto dir = testutil::scratch("png");
    write_png_gray(dir / "a.png", 1, 1, {128});
    const auto img = load_image(dir / "a.png");
    ASSERT_EQ(img.pixels.size(), 1u);
    EXPECT_DOUBLE_EQ(img.pixels[0], 128.0 / 255.0);
}

TEST(ImageIo, PngRgbUsesLuma) {
    const auto dir = testutil::scratch("rgb");
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = 1;
    img.height = 1;
    img.format = PNG_FORMAT_RGB;
    const unsigned char px[3] = {255, 0, 0};
    ASSERT_TRUE(png_image_write_to_file(&img, (dir / "r.png").c_str(), 0, px, 0, nullptr));
    EXPECT_NEAR(load_image(dir / "r.png").pixels[0], 0.299, 1e-9);
}

TEST(ImageIo, TruncatedHeaderIsUnreadable) {
    const auto dir = testutil::scratch("trunc");
    testutil::spit(dir / "t.pgm", "P5\n2");
    try {
        load_image(dir / "t.pgm");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("unreadable file"), std::string::npos);
    }
}

TEST(ImageIo, TruncatedPixelDataIsUnreadable) {
    const auto dir = testutil::scratch("short");
    testutil::spit(dir / "t.pgm", std::string("P5\n4 4\n255\n") + std::string(5, '\x10'));
    EXPECT_THROW(load_image(dir / "t.pgm"), DataError);
}

TEST(ImageIo, SixteenBitPgmRejected) {
    const auto dir = testutil::scratch("16");
    testutil::spit(dir / "t.pgm", std::string("P5\n1 1\n65535\n") + std::string(2, '\x01'));
    try {
        load_image(dir / "t.pgm");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("unsupported bit depth"), std::string::npos);
    }
}

TEST(ImageIo, ZeroDimensionRejected) {
    const auto dir = testutil::scratch("zero");
    testutil::spit(dir / "t.pgm", "P5\n0 3\n255\n");
    EXPECT_THROW(load_image(dir / "t.pgm"), DataError);
}

TEST(ImageIo, MissingFile) { EXPECT_THROW(load_image("/nonexistent/x.pgm"), DataError); }

TEST(ImageIo, PgmRoundTrip) {
    const auto dir = testutil::scratch("rt");
    const auto img = render_synthetic(2, 40, 99, 0.05);
    write_pgm(dir / "a.pgm", img);
    const auto once = load_image(dir / "a.pgm");
    write_pgm(dir / "b.pgm", once);
    const auto twice = load_image(dir / "b.pgm");
    EXPECT_EQ(once.pixels, twice.pixels);
    EXPECT_EQ(testutil::slurp(dir / "a.pgm"), testutil::slurp(dir / "b.pgm"));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_NEAR(once.pixels[i], img.pixels[i], 0.5 / 255 + 1e-12);
}

TEST(Manifest, ThreeLines) {
    const auto dir = testutil::scratch("m3");
    testutil::spit(dir / "m.tsv", "# header\na.pgm\tcat\ttrain\nb.pgm\tdog\ttrain\n\nc.pgm\tcat\ttest\n");
    const auto m = load_manifest(dir / "m.tsv");
    ASSERT_EQ(m.entries.size(), 3u);
    EXPECT_EQ(m.entries[2].label, "cat");
    EXPECT_EQ(m.entries[2].split, Split::Test);
    EXPECT_EQ(m.indices(Split::Train), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(m.resolve(m.entries[0]), dir / "a.pgm");
}

TEST(Manifest, BadSplitToken) {
    const auto dir = testutil::scratch("dev");
    testutil::spit(dir / "m.tsv", "a.pgm\tcat\tdev\n");
    try {
        load_manifest(dir / "m.tsv");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("bad split token"), std::string::npos);
    }
}

TEST(Manifest, EmptyFileWarns) {
    const auto dir = testutil::scratch("empty");
    testutil::spit(dir / "m.tsv", "");
    const auto m = load_manifest(dir / "m.tsv");
    EXPECT_TRUE(m.entries.empty());
    EXPECT_FALSE(m.warnings.empty());
}

TEST(Manifest, MalformedAndDuplicate) {
    const auto dir = testutil::scratch("bad");
    testutil::spit(dir / "a.tsv", "a.pgm\tcat\n");
    EXPECT_THROW(load_manifest(dir / "a.tsv"), DataError);
    testutil::spit(dir / "b.tsv", "a.pgm\tcat\ttrain\na.pgm\tcat\ttest\n");
    EXPECT_THROW(load_manifest(dir / "b.tsv"), DataError);
    testutil::spit(dir / "c.tsv", "a.pgm\tcat\ttrain\nb.pgm\tdog\ttest\n");
    EXPECT_THROW(load_manifest(dir / "c.tsv"), DataError);
}

TEST(Manifest, WriteThenLoad) {
    const auto dir = testutil::scratch("wl");
    DatasetManifest m;
    m.entries = {{"x/1.pgm", "a", Split::Train}, {"x/2.pgm", "a", Split::Test}};
    write_manifest(dir / "m.tsv", m);
    const auto back = load_manifest(dir / "m.tsv");
    ASSERT_EQ(back.entries.size(), 2u);
    EXPECT_EQ(back.entries[1].path, "x/2.pgm");
    EXPECT_EQ(back.entries[1].split, Split::Test);
}

TEST(Synthetic, ByteIdenticalReruns) {
    const auto a = testutil::scratch("a"), b = testutil::scratch("b");
    SyntheticSpec spec;
    generate_synthetic(spec, a);
    generate_synthetic(spec, b);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto rel = fs::relative(e.path(), a);
        EXPECT_EQ(testutil::slurp(e.path()), testutil::slurp(b / rel)) << rel;
    }
    EXPECT_EQ(files, 121u);  // 120 images + manifest
}

TEST(Synthetic, PreconditionOnClasses) {
    SyntheticSpec spec;
    spec.classes = 1;
    EXPECT_THROW(generate_synthetic(spec, testutil::scratch("p")), std::invalid_argument);
}

TEST(Synthetic, EightyTwentySplit) {
    const auto dir = testutil::scratch("s");
    SyntheticSpec spec{2, 10, 64, 1, 0.05};
    const auto m = generate_synthetic(spec, dir);
    ASSERT_EQ(m.entries.size(), 20u);
    std::map<std::string, std::pair<int, int>> counts;
    for (const auto& e : m.entries) (e.split == Split::Train ? counts[e.label].first : counts[e.label].second)++;
    ASSERT_EQ(counts.size(), 2u);
    for (const auto& [label, c] : counts) {
        EXPECT_EQ(c.first, 8) << label;
        EXPECT_EQ(c.second, 2) << label;
    }
    std::size_t pgms = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.path().extension() == ".pgm") ++pgms;
    EXPECT_EQ(pgms, 20u);
    const auto reloaded = load_manifest(dir / "manifest.tsv");
    EXPECT_EQ(reloaded.entries.size(), 20u);
    const auto img = load_image(reloaded.resolve(reloaded.entries[0]));
    EXPECT_EQ(img.width, 64);
}

TEST(Synthetic, PixelsInUnitRange) {
    for (int c = 0; c < 4; ++c) {
        const auto img = render_synthetic(c, 48, 5, 0.2);
        for (double p : img.pixels) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
        }
    }
}
