#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "facefeat/corpus.hpp"
#include "facefeat/matcher.hpp"
#include "facefeat/pnm.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace facefeat;

namespace {

Template random_template(std::mt19937& rng, int size = 10) {
  return testutil::template_from_values(testutil::random_image(rng, size, size).values(),
                                        size, Feature::left_eye);
}

GrayImage window_from(const Template& t) { return t.as_image(); }

}  // namespace

TEST(Ncc, SelfCorrelationIsOne) {
  std::mt19937 rng(51);
  Template t = random_template(rng);
  EXPECT_NEAR(ncc(window_from(t), t), 1.0, 1e-12);
}

TEST(Ncc, AmplitudeInvariance) {
  std::mt19937 rng(52);
  Template t = random_template(rng);
  GrayImage scaled = window_from(t);
  for (double& v : scaled.values()) v = 2.0 * v + 17.0;
  EXPECT_NEAR(ncc(scaled, t), 1.0, 1e-9);

  GrayImage negated = window_from(t);
  for (double& v : negated.values()) v = -v;
  EXPECT_NEAR(ncc(negated, t), -1.0, 1e-9);
}

TEST(Ncc, OrthogonalZeroMeanVectorsScoreZero) {
  GrayImage window(2, 2);
  window.values() = {1.0, -1.0, 0.0, 0.0};
  Template t = testutil::template_from_values({0.0, 0.0, 1.0, -1.0}, 2, Feature::left_eye);
  EXPECT_EQ(ncc(window, t), 0.0);
}

TEST(Ncc, FlatSidesScoreZero) {
  std::mt19937 rng(53);
  Template t = random_template(rng, 4);
  EXPECT_EQ(ncc(GrayImage(4, 4, 9.0), t), 0.0);
  Template flat = testutil::template_from_values(std::vector<double>(16, 3.0), 4, Feature::mouth);
  std::mt19937 rng2(54);
  EXPECT_EQ(ncc(testutil::random_image(rng2, 4, 4), flat), 0.0);
}

TEST(Ncc, DimensionMismatchIsAnError) {
  std::mt19937 rng(55);
  Template t = random_template(rng, 10);
  EXPECT_THROW(ncc(GrayImage(9, 10), t), SizeError);
}

TEST(Ncc, StaysInsideUnitInterval) {
  std::mt19937 rng(56);
  for (int trial = 0; trial < 1000; ++trial) {
    Template t = random_template(rng, 6);
    GrayImage w = testutil::random_image(rng, 6, 6, -100.0, 300.0);
    const double score = ncc(w, t);
    EXPECT_LE(std::abs(score), 1.0 + 1e-9);
  }
}

TEST(Ncc, AgreesWithPlainFormula) {
  std::mt19937 rng(57);
  for (int trial = 0; trial < 200; ++trial) {
    Template t = random_template(rng, 8);
    GrayImage w = testutil::random_image(rng, 8, 8);
    EXPECT_NEAR(ncc(w, t), oracle::ncc_plain(w, t), 1e-9);
  }
}

TEST(ScanRegion, FindsPlantedTemplate) {
  std::mt19937 rng(61);
  Template t = random_template(rng);
  GrayImage img = testutil::random_image(rng, 60, 70);
  testutil::plant(img, window_from(t), 13, 7);

  MatchResult m = scan_region(img, img.bounds(), 10, 10, t);
  EXPECT_EQ(m.patch, (Rect{13, 7, 10, 10}));
  EXPECT_GE(m.score, 0.999999);

  oracle::BruteHit brute = oracle::brute_scan(img, img.bounds(), 10, 10, t);
  EXPECT_EQ(brute.x, 13);
  EXPECT_EQ(brute.y, 7);
}

TEST(ScanRegion, TieKeepsFirstRowMajorPosition) {
  std::mt19937 rng(62);
  Template t = random_template(rng, 4);
  GrayImage img(24, 24, 0.0);
  testutil::plant(img, window_from(t), 5, 5);
  testutil::plant(img, window_from(t), 5, 9);  // identical copy further down

  MatchResult m = scan_region(img, img.bounds(), 4, 4, t);
  EXPECT_EQ(m.patch.x, 5);
  EXPECT_EQ(m.patch.y, 5);
}

TEST(ScanRegion, PatchLargerThanRegionIsAnError) {
  std::mt19937 rng(63);
  Template t = random_template(rng);
  GrayImage img(32, 32);
  EXPECT_THROW(scan_region(img, Rect{0, 0, 8, 8}, 10, 10, t), SizeError);
}

TEST(ScanRegion, RegionOutsideImageIsAnError) {
  std::mt19937 rng(64);
  Template t = random_template(rng);
  GrayImage img(32, 32);
  EXPECT_THROW(scan_region(img, Rect{28, 0, 10, 10}, 4, 4, t), BoundsError);
}

TEST(ScanRegion, MatchesBruteForceOracle) {
  std::mt19937 rng(65);
  std::uniform_int_distribution<int> dim(16, 64);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = dim(rng), h = dim(rng);
    GrayImage img = testutil::random_image(rng, w, h);
    std::uniform_int_distribution<int> rx(0, w - 12), ry(0, h - 12);
    const int x = rx(rng), y = ry(rng);
    std::uniform_int_distribution<int> rw(12, w - x), rh(12, h - y);
    const Rect region{x, y, rw(rng), rh(rng)};
    std::uniform_int_distribution<int> pw(3, region.w), ph(3, region.h);
    const int patch_w = pw(rng), patch_h = ph(rng);
    Template t = random_template(rng, 6);

    oracle::BruteHit brute = oracle::brute_scan(img, region, patch_w, patch_h, t);
    for (int workers : {1, 3}) {
      MatchResult m = scan_region(img, region, patch_w, patch_h, t, workers);
      EXPECT_EQ(m.patch.x, brute.x) << "trial " << trial;
      EXPECT_EQ(m.patch.y, brute.y) << "trial " << trial;
      EXPECT_NEAR(m.score, brute.score, 1e-9);
    }
  }
}

TEST(ScanRegion, WorkerCountNeverChangesTheResult) {
  std::mt19937 rng(66);
  Template t = random_template(rng, 4);
  // constant image: every score ties at 0, first position must win for any
  // worker count
  GrayImage flat(40, 40, 5.0);
  // double plant: a genuine tie between two positions
  GrayImage tied(40, 40, 0.0);
  testutil::plant(tied, window_from(t), 3, 3);
  testutil::plant(tied, window_from(t), 21, 17);
  GrayImage noisy = testutil::random_image(rng, 40, 40);

  for (const GrayImage* img : {&flat, &tied, &noisy}) {
    const MatchResult ref = scan_region(*img, img->bounds(), 4, 4, t, 1);
    for (int workers : {2, 3, 8, 33}) {
      MatchResult m = scan_region(*img, img->bounds(), 4, 4, t, workers);
      EXPECT_EQ(m.patch, ref.patch);
      EXPECT_EQ(m.score, ref.score);  // bit identical
    }
  }
}

TEST(ScanRegion, ConstantImageScoresZeroAtOrigin) {
  std::mt19937 rng(67);
  Template t = random_template(rng, 4);
  GrayImage img(30, 30, 42.0);
  MatchResult m = scan_region(img, Rect{6, 8, 20, 18}, 4, 4, t);
  EXPECT_EQ(m.score, 0.0);
  EXPECT_EQ(m.patch.x, 6);
  EXPECT_EQ(m.patch.y, 8);
}

TEST(ScanRegion, AffineAmplitudeKeepsArgmax) {
  std::mt19937 rng(68);
  for (int trial = 0; trial < 20; ++trial) {
    GrayImage img = testutil::random_image(rng, 48, 40);
    Template t = random_template(rng, 6);
    GrayImage affine = img;
    for (double& v : affine.values()) v = 2.5 * v - 12.0;

    MatchResult a = scan_region(img, img.bounds(), 9, 7, t);
    MatchResult b = scan_region(affine, affine.bounds(), 9, 7, t);
    EXPECT_EQ(a.patch, b.patch);
    EXPECT_NEAR(a.score, b.score, 1e-7);
  }
}

TEST(ScanHierarchical, SingleLevelPyramidIsBitIdenticalToExhaustive) {
  std::mt19937 rng(71);
  GrayImage img = testutil::random_image(rng, 64, 64);
  Template t = random_template(rng, 6);
  Pyramid pyr = build_pyramid(img, 33);  // next level would be 32 < 33
  ASSERT_EQ(pyr.level_count(), 1);

  for (int workers : {1, 2}) {
    MatchResult h = scan_hierarchical(pyr, Rect{4, 4, 50, 52}, 9, 8, t, 2, workers);
    MatchResult e = scan_region(img, Rect{4, 4, 50, 52}, 9, 8, t, workers);
    EXPECT_EQ(h.patch, e.patch);
    EXPECT_EQ(h.score, e.score);
  }
}

TEST(ScanHierarchical, ConstantImageScoresZeroAtRegionOrigin) {
  std::mt19937 rng(72);
  Template t = random_template(rng, 4);
  GrayImage img(64, 64, 3.0);
  Pyramid pyr = build_pyramid(img, 16);
  MatchResult m = scan_hierarchical(pyr, Rect{5, 7, 40, 40}, 6, 6, t, 2);
  EXPECT_EQ(m.score, 0.0);
  EXPECT_EQ(m.patch.x, 5);
  EXPECT_EQ(m.patch.y, 7);
}

TEST(ScanHierarchical, RecoversPlantedPatternsThroughThePyramid) {
  std::mt19937 rng(73);
  int exact = 0;
  const int trials = 25;
  for (int trial = 0; trial < trials; ++trial) {
    GrayImage img = testutil::random_image(rng, 256, 320, 80.0, 170.0);
    GrayImage pattern = testutil::random_smooth_pattern(rng, 40, 32);
    const Rect region{20, 30, 200, 240};
    std::uniform_int_distribution<int> px(region.x, region.right() - 40);
    std::uniform_int_distribution<int> py(region.y, region.bottom() - 32);
    const int x = px(rng), y = py(rng);
    testutil::plant(img, pattern, x, y);
    Template t = build_template({pattern}, Method::grayscale, Feature::mouth, 10);

    Pyramid pyr = build_pyramid(img, 32);
    MatchResult e = scan_region(img, region, 40, 32, t);
    EXPECT_EQ(e.patch.x, x);
    EXPECT_EQ(e.patch.y, y);
    EXPECT_GE(e.score, 0.999);

    MatchResult h = scan_hierarchical(pyr, region, 40, 32, t, pyr.level_count());
    if (h.patch == e.patch) {
      ++exact;
    } else {
      EXPECT_NEAR(h.score, e.score, 0.01);
    }
  }
  EXPECT_GE(exact, trials * 90 / 100);
}

TEST(ScanHierarchical, DefaultRadiusMatchesExhaustiveOnPlantedInputs) {
  std::mt19937 rng(74);
  for (int trial = 0; trial < 8; ++trial) {
    GrayImage img = testutil::random_image(rng, 512, 768, 70.0, 180.0);
    GrayImage pattern = testutil::random_smooth_pattern(rng, 48, 40);
    const Rect region{40, 60, 220, 260};
    std::uniform_int_distribution<int> px(region.x, region.right() - 48);
    std::uniform_int_distribution<int> py(region.y, region.bottom() - 40);
    const int x = px(rng), y = py(rng);
    testutil::plant(img, pattern, x, y);
    Template t = build_template({pattern}, Method::grayscale, Feature::mouth, 10);

    Pyramid pyr = build_pyramid(img, 20);
    ASSERT_GE(pyr.level_count(), 2);
    MatchResult e = scan_region(img, region, 48, 40, t);
    MatchResult h = scan_hierarchical(pyr, region, 48, 40, t, 2);
    EXPECT_EQ(e.patch, (Rect{x, y, 48, 40}));
    EXPECT_EQ(h.patch, e.patch);
  }
}

TEST(ScanHierarchical, HaarHierarchicalAgreesWithExhaustiveOnCorpusFaces) {
  // Band-pass surfaces have weak, oscillatory coarse peaks and lookalike
  // basins (brow vs eye bar); this pins the multi-candidate descent against
  // the exhaustive scan on a realistic corpus, where a single-candidate
  // descent used to land 25 px off.
  testutil::TempDir dir("hier_haar");
  CorpusOptions copts;
  copts.count = 6;
  copts.seed = 3;
  CorpusManifest man = gen_corpus(copts, dir.path);
  auto anns = load_annotations(man.annotation_file);

  FeatureTemplates ts;
  for (std::size_t fi = 0; fi < kAllFeatures.size(); ++fi) {
    std::ifstream list(man.crop_lists[fi]);
    std::vector<GrayImage> crops;
    std::string rel;
    while (list >> rel) crops.push_back(read_pgm(dir.path / rel));
    Template t = build_template(crops, Method::haar, kAllFeatures[fi], 10);
    (fi == 0 ? ts.left_eye : fi == 1 ? ts.right_eye : ts.mouth) = t;
  }

  DetectOptions plain, hier;
  hier.hierarchical = true;
  for (const Annotation& ann : anns) {
    GrayImage gray = read_pgm(ann.image_path);
    const FaceBox face = FaceBox::from_points(ann.face_points);
    const PatchSpec spec = patch_schedule(PatchShape::rectangular, face.rect.w)[0];
    DetectResult a = detect_gray(gray, face, Method::haar, spec, ts, plain);
    DetectResult b = detect_gray(gray, face, Method::haar, spec, ts, hier);
    for (int i = 0; i < 3; ++i) {
      ASSERT_TRUE(a[i].ok);
      ASSERT_TRUE(b[i].ok);
      EXPECT_EQ(b[i].match.patch, a[i].match.patch) << ann.image_path;
    }
  }
}

TEST(Detect, LocatesAllThreePlantedFeatures) {
  std::mt19937 rng(81);
  GrayImage img = testutil::random_image(rng, 220, 220, 60.0, 200.0);
  const FaceBox face = FaceBox::from_rect(Rect{10, 10, 200, 200});

  Template t_le = testutil::template_from_values(
      testutil::random_image(rng, 10, 10).values(), 10, Feature::left_eye);
  Template t_re = testutil::template_from_values(
      testutil::random_image(rng, 10, 10).values(), 10, Feature::right_eye);
  Template t_m = testutil::template_from_values(
      testutil::random_image(rng, 10, 10).values(), 10, Feature::mouth);

  // margin 0 / width 1.0 partition: RE (10,10,100,100), LE (110,10,100,100),
  // mouth (10,110,200,100)
  testutil::plant(img, t_re.as_image(), 40, 50);
  testutil::plant(img, t_le.as_image(), 150, 30);
  testutil::plant(img, t_m.as_image(), 90, 160);

  PatchSpec spec;
  spec.eye_w = spec.eye_h = spec.mouth_w = spec.mouth_h = 10;
  DetectOptions opts;
  opts.eye_margin_frac = 0.0;
  opts.mouth_width_frac = 1.0;

  DetectResult r = detect_gray(img, face, Method::grayscale, spec,
                               FeatureTemplates{t_le, t_re, t_m}, opts);
  ASSERT_TRUE(r[0].ok);
  ASSERT_TRUE(r[1].ok);
  ASSERT_TRUE(r[2].ok);
  EXPECT_EQ(r[0].match.patch, (Rect{150, 30, 10, 10}));
  EXPECT_EQ(r[1].match.patch, (Rect{40, 50, 10, 10}));
  EXPECT_EQ(r[2].match.patch, (Rect{90, 160, 10, 10}));
  for (const FeatureDetection& d : r) EXPECT_GE(d.match.score, 0.999999);
}

TEST(Detect, RgbWrapperMatchesGrayPath) {
  std::mt19937 rng(82);
  RgbImage rgb(120, 120);
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 120; ++x) {
      const auto v = static_cast<std::uint8_t>(rng() % 256);
      rgb.set_pixel(x, y, v, v, v);
    }
  }
  const FaceBox face = FaceBox::from_rect(Rect{4, 4, 100, 100});
  Template t = random_template(rng);
  FeatureTemplates ts{testutil::template_from_values(t.values, 10, Feature::left_eye),
                      testutil::template_from_values(t.values, 10, Feature::right_eye),
                      testutil::template_from_values(t.values, 10, Feature::mouth)};
  PatchSpec spec;
  spec.eye_w = spec.eye_h = spec.mouth_w = spec.mouth_h = 12;

  DetectResult a = detect(rgb, face, Method::grayscale, spec, ts);
  DetectResult b = detect_gray(to_grayscale(rgb), face, Method::grayscale, spec, ts);
  for (int i = 0; i < 3; ++i) {
    ASSERT_TRUE(a[i].ok);
    EXPECT_EQ(a[i].match.patch, b[i].match.patch);
    EXPECT_EQ(a[i].match.score, b[i].match.score);
  }
}

TEST(Detect, FeatureErrorsDoNotAbortOthers) {
  GrayImage img(60, 60, 0.0);
  img.at(10, 50) = 255.0;  // non-flat so the mouth scan scores something
  const FaceBox face = FaceBox::from_rect(Rect{0, 0, 60, 60});
  std::mt19937 rng(83);
  Template t = random_template(rng);
  FeatureTemplates ts{testutil::template_from_values(t.values, 10, Feature::left_eye),
                      testutil::template_from_values(t.values, 10, Feature::right_eye),
                      testutil::template_from_values(t.values, 10, Feature::mouth)};
  PatchSpec spec;
  spec.eye_w = 100;  // larger than any eye region
  spec.eye_h = 10;
  spec.mouth_w = 10;
  spec.mouth_h = 10;
  DetectOptions opts;
  opts.eye_margin_frac = 0.0;
  opts.mouth_width_frac = 1.0;

  DetectResult r = detect_gray(img, face, Method::grayscale, spec, ts, opts);
  EXPECT_FALSE(r[0].ok);
  EXPECT_FALSE(r[1].ok);
  EXPECT_FALSE(r[0].error.empty());
  EXPECT_TRUE(r[2].ok);
}

TEST(Detect, ConstantImageScoresZeroForBothMethods) {
  GrayImage img(120, 120, 99.0);
  const FaceBox face = FaceBox::from_rect(Rect{10, 10, 100, 100});
  PatchSpec spec;
  spec.eye_w = spec.eye_h = spec.mouth_w = spec.mouth_h = 10;

  for (Method method : {Method::grayscale, Method::haar}) {
    FeatureTemplates ts{
        build_template({GrayImage(12, 12, 50.0)}, method, Feature::left_eye, 10),
        build_template({GrayImage(12, 12, 50.0)}, method, Feature::right_eye, 10),
        build_template({GrayImage(12, 12, 50.0)}, method, Feature::mouth, 10)};
    DetectResult r = detect_gray(img, face, method, spec, ts);
    for (const FeatureDetection& d : r) {
      ASSERT_TRUE(d.ok);
      EXPECT_EQ(d.match.score, 0.0);
    }
  }
}

TEST(Detect, MismatchedTemplateMethodIsAnError) {
  GrayImage img(120, 120, 0.0);
  const FaceBox face = FaceBox::from_rect(Rect{10, 10, 100, 100});
  std::mt19937 rng(84);
  Template t = random_template(rng);
  FeatureTemplates ts{testutil::template_from_values(t.values, 10, Feature::left_eye),
                      testutil::template_from_values(t.values, 10, Feature::right_eye),
                      testutil::template_from_values(t.values, 10, Feature::mouth)};
  PatchSpec spec;
  spec.eye_w = spec.eye_h = spec.mouth_w = spec.mouth_h = 10;
  EXPECT_THROW(detect_gray(img, face, Method::haar, spec, ts), InputError);
}

TEST(Detect, FaceOutsideImagePropagates) {
  GrayImage img(50, 50, 0.0);
  std::mt19937 rng(85);
  Template t = random_template(rng);
  FeatureTemplates ts{testutil::template_from_values(t.values, 10, Feature::left_eye),
                      testutil::template_from_values(t.values, 10, Feature::right_eye),
                      testutil::template_from_values(t.values, 10, Feature::mouth)};
  PatchSpec spec;
  spec.eye_w = spec.eye_h = spec.mouth_w = spec.mouth_h = 10;
  EXPECT_THROW(
      detect_gray(img, FaceBox::from_rect(Rect{0, 0, 80, 80}), Method::grayscale, spec, ts),
      BoundsError);
}
