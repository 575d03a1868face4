#include <cmath>

#include "doctest.h"
#include "lwcnn/preprocess.hpp"
#include "synthetic.hpp"

using namespace lwcnn;
using namespace lwcnn::testing;

namespace {

Rgb8 solid(std::size_t h, std::size_t w, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Rgb8 img(h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
        img.pixels[3 * i] = r;
        img.pixels[3 * i + 1] = g;
        img.pixels[3 * i + 2] = b;
    }
    return img;
}

BinaryMask mask_from(std::size_t h, std::size_t w, std::initializer_list<std::pair<std::size_t, std::size_t>> on) {
    BinaryMask m(h, w);
    for (auto [y, x] : on) {
        m.at(y, x) = 1;
    }
    return m;
}

}  // namespace

TEST_CASE("to_grayscale") {
    for (int v = 0; v < 256; ++v) {
        const auto u = static_cast<std::uint8_t>(v);
        CHECK(to_grayscale(solid(1, 1, u, u, u)).pixels[0] == u);
    }
    CHECK(to_grayscale(solid(1, 1, 255, 0, 0)).pixels[0] == 76);
    CHECK(to_grayscale(solid(1, 1, 255, 255, 255)).pixels[0] == 255);
}

TEST_CASE("gaussian_blur5") {
    SUBCASE("constant image is unchanged") {
        Grayscale8 flat(7, 9, 137);
        CHECK(gaussian_blur5(flat) == flat);
    }
    SUBCASE("blurred impulse is four-fold symmetric") {
        Grayscale8 impulse(11, 11, 0);
        impulse.at(5, 5) = 255;
        const auto out = gaussian_blur5(impulse);
        for (std::size_t y = 0; y < 11; ++y) {
            for (std::size_t x = 0; x < 11; ++x) {
                CHECK(out.at(y, x) == out.at(10 - y, x));
                CHECK(out.at(y, x) == out.at(y, 10 - x));
                CHECK(out.at(y, x) == out.at(x, y));
            }
        }
    }
    SUBCASE("separable result matches a direct 2-D convolution within 1") {
        Rng rng(3);
        const double sigma = 1.1;
        double w1[5], total = 0.0;
        for (int i = 0; i < 5; ++i) {
            w1[i] = std::exp(-(i - 2) * (i - 2) / (2 * sigma * sigma));
            total += w1[i];
        }
        auto reflect = [](long i, long n) {
            if (n == 1) {
                return 0L;
            }
            while (i < 0 || i >= n) {
                i = i < 0 ? -i : 2 * n - 2 - i;
            }
            return i;
        };
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t h = 1 + rng.below(20), w = 1 + rng.below(20);
            Grayscale8 img(h, w);
            for (auto &p : img.pixels) {
                p = static_cast<std::uint8_t>(rng.below(256));
            }
            const auto out = gaussian_blur5(img, sigma);
            for (long y = 0; y < static_cast<long>(h); ++y) {
                for (long x = 0; x < static_cast<long>(w); ++x) {
                    double s = 0.0;
                    for (int dy = -2; dy <= 2; ++dy) {
                        for (int dx = -2; dx <= 2; ++dx) {
                            s += w1[dy + 2] * w1[dx + 2] / (total * total) *
                                 img.at(reflect(y + dy, h), reflect(x + dx, w));
                        }
                    }
                    CHECK(std::abs(out.at(y, x) - s) <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("threshold is strictly greater-than") {
    Grayscale8 img(1, 3);
    img.pixels = {10, 200, 45};
    const auto m = threshold(img, 45);
    CHECK(m.bits == std::vector<std::uint8_t>{0, 1, 0});
    CHECK(threshold(Grayscale8(4, 4, 0), 45).count() == 0);
}

TEST_CASE("erode and dilate") {
    const auto single = mask_from(7, 7, {{3, 3}});
    CHECK(erode(single, 1).count() == 0);
    const auto grown = dilate(single, 1);
    CHECK(grown.count() == 9);
    for (std::size_t y = 2; y <= 4; ++y) {
        for (std::size_t x = 2; x <= 4; ++x) {
            CHECK(grown.at(y, x) == 1);
        }
    }
    CHECK(erode(single, 0) == single);

    // Full-frame foreground: erosion eats the border, dilation restores it.
    BinaryMask full(6, 6);
    std::fill(full.bits.begin(), full.bits.end(), 1);
    CHECK(erode(full, 1).count() == 16);
    CHECK(dilate(erode(full, 2), 2) == full);

    // Opening by erode 2 / dilate 2 deletes small specks but keeps a 10x10 square.
    BinaryMask m(40, 40);
    for (std::size_t y = 5; y < 15; ++y) {
        for (std::size_t x = 20; x < 30; ++x) {
            m.at(y, x) = 1;
        }
    }
    BinaryMask square = m;
    m.at(30, 5) = 1;
    m.at(30, 6) = 1;
    m.at(35, 35) = 1;
    m.at(36, 36) = 1;
    m.at(25, 15) = 1;
    m.at(26, 15) = 1;
    m.at(25, 16) = 1;
    m.at(26, 16) = 1;
    CHECK(dilate(erode(m, 2), 2) == square);
}

TEST_CASE("largest_component_bbox") {
    SUBCASE("solid rectangle") {
        BinaryMask m(60, 50);
        for (std::size_t y = 20; y <= 40; ++y) {
            for (std::size_t x = 10; x <= 30; ++x) {
                m.at(y, x) = 1;
            }
        }
        const auto c = largest_component_bbox(m);
        CHECK(c.box == BoundingBox{20, 40, 10, 30});
        CHECK_FALSE(c.empty_fallback);
    }
    SUBCASE("bigger blob wins") {
        BinaryMask m(30, 30);
        for (std::size_t i = 0; i < 10; ++i) {
            m.at(2, i) = 1;  // 10 px, found first
        }
        for (std::size_t y = 10; y < 15; ++y) {
            for (std::size_t x = 10; x < 20; ++x) {
                m.at(y, x) = 1;  // 50 px
            }
        }
        const auto c = largest_component_bbox(m);
        CHECK(c.area == 50);
        CHECK(c.box == BoundingBox{10, 14, 10, 19});
    }
    SUBCASE("ties go to the earliest component; diagonal pixels connect") {
        const auto m = mask_from(6, 6, {{0, 4}, {1, 5}, {4, 0}, {5, 1}});
        const auto c = largest_component_bbox(m);
        CHECK(c.area == 2);
        CHECK(c.box == BoundingBox{0, 1, 4, 5});
    }
    SUBCASE("empty mask falls back to the whole image") {
        const auto c = largest_component_bbox(BinaryMask(8, 12));
        CHECK(c.box == BoundingBox{0, 7, 0, 11});
        CHECK(c.empty_fallback);
    }
    SUBCASE("matches a union-find oracle on random masks; box is minimal") {
        Rng rng(19);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t h = 1 + rng.below(25), w = 1 + rng.below(25);
            const double density = rng.uniform(0.05, 0.6);
            BinaryMask m(h, w);
            for (auto &b : m.bits) {
                b = rng.bernoulli(density) ? 1 : 0;
            }
            const auto oracle = components_oracle(m);
            const auto got = largest_component_bbox(m);
            if (oracle.empty()) {
                CHECK(got.empty_fallback);
                continue;
            }
            const auto best = *std::max_element(oracle.begin(), oracle.end(), [](const auto &a, const auto &b) {
                return a.area < b.area || (a.area == b.area && a.first > b.first);
            });
            CHECK(got.area == best.area);
            CHECK(got.box == BoundingBox{best.top, best.bottom, best.left, best.right});
            CHECK(got.box.area() <= h * w);
        }
    }
}

TEST_CASE("crop_resize") {
    SUBCASE("full box of a 150x150 image is the identity") {
        Rng rng(1);
        Rgb8 img(150, 150);
        for (auto &p : img.pixels) {
            p = static_cast<std::uint8_t>(rng.below(256));
        }
        CHECK(crop_resize(img, {0, 149, 0, 149}) == img);
    }
    SUBCASE("constant crop of any shape stays constant, including a 1-pixel box") {
        const auto img = solid(40, 13, 9, 80, 200);
        for (const BoundingBox box : {BoundingBox{0, 39, 0, 12}, BoundingBox{5, 5, 7, 7}, BoundingBox{3, 30, 2, 4}}) {
            const auto out = crop_resize(img, box);
            CHECK(out.height == 150);
            CHECK(out.width == 150);
            CHECK(out == solid(150, 150, 9, 80, 200));
        }
    }
    SUBCASE("checkerboard left half matches the bilinear oracle within 1") {
        Rgb8 board(300, 300);
        for (std::size_t y = 0; y < 300; ++y) {
            for (std::size_t x = 0; x < 300; ++x) {
                const std::uint8_t v = ((y / 10 + x / 10) % 2) ? 255 : 0;
                board.at(y, x, 0) = v;
                board.at(y, x, 1) = static_cast<std::uint8_t>(255 - v);
                board.at(y, x, 2) = static_cast<std::uint8_t>(x % 256);
            }
        }
        const BoundingBox left{0, 299, 0, 149};
        const auto out = crop_resize(board, left);
        Rgb8 crop(300, 150);
        for (std::size_t y = 0; y < 300; ++y) {
            for (std::size_t x = 0; x < 150; ++x) {
                for (int c = 0; c < 3; ++c) {
                    crop.at(y, x, c) = board.at(y, x, c);
                }
            }
        }
        for (std::size_t y = 0; y < 150; ++y) {
            for (std::size_t x = 0; x < 150; ++x) {
                for (int c = 0; c < 3; ++c) {
                    CHECK(std::abs(out.at(y, x, c) - bilinear_oracle(crop, 150, 150, y, x, c)) <= 1.0);
                }
            }
        }
    }
    SUBCASE("invalid box") {
        CHECK_THROWS_AS(crop_resize(Rgb8(10, 10), {0, 10, 0, 5}), std::invalid_argument);
        CHECK_THROWS_AS(crop_resize(Rgb8(10, 10), {5, 4, 0, 5}), std::invalid_argument);
    }
}

TEST_CASE("crop_pipeline") {
    SUBCASE("bright disc") {
        Rgb8 img(100, 100);
        fill_disc(img, 50, 50, 20, 220);
        const auto r = crop_pipeline(img);
        CHECK(std::abs(static_cast<long>(r.box.top) - 30) <= 1);
        CHECK(std::abs(static_cast<long>(r.box.bottom) - 70) <= 1);
        CHECK(std::abs(static_cast<long>(r.box.left) - 30) <= 1);
        CHECK(std::abs(static_cast<long>(r.box.right) - 70) <= 1);
        CHECK(r.image.height == 150);
        CHECK(r.image.width == 150);
        CHECK_FALSE(r.empty_fallback);
    }
    SUBCASE("all black falls back to the full frame") {
        const auto r = crop_pipeline(Rgb8(64, 80));
        CHECK(r.empty_fallback);
        CHECK(r.box == BoundingBox{0, 63, 0, 79});
        CHECK(r.image == Rgb8(150, 150));
    }
    SUBCASE("foreground spanning the frame crops to the full frame") {
        const auto img = solid(90, 120, 200, 200, 200);
        const auto r = crop_pipeline(img);
        CHECK(r.box == BoundingBox{0, 89, 0, 119});
    }
    SUBCASE("deterministic and always 150x150x3") {
        Rng rng(6);
        for (int i = 0; i < 5; ++i) {
            Rgb8 img(30 + rng.below(100), 30 + rng.below(100));
            for (auto &p : img.pixels) {
                p = static_cast<std::uint8_t>(rng.below(256));
            }
            const auto a = crop_pipeline(img);
            const auto b = crop_pipeline(img);
            CHECK(a.image == b.image);
            CHECK(a.image.pixels.size() == 150 * 150 * 3);
            CHECK(a.box.area() <= img.height * img.width);
        }
    }
}
