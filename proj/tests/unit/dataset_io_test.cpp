#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "segpoison/dataset_io.hpp"
#include "segpoison/errors.hpp"
#include "support/generators.hpp"
#include "support/temp_dir.hpp"

namespace segpoison {
namespace {

TEST(Png, ImageAndMaskAreBitExact) {
  testing::TempDir tmp;
  testing::Gen gen(3);
  const Image img = gen.image(7, 5);
  LabelMask mask = gen.mask(7, 5, 200, 0.3);
  mask.at(0, 0) = 0;
  mask.at(0, 1) = 254;
  write_png(tmp.path() / "i.png", img);
  write_png(tmp.path() / "m.png", mask);
  EXPECT_EQ(read_png_image(tmp.path() / "i.png"), img);
  EXPECT_EQ(read_png_mask(tmp.path() / "m.png"), mask);
}

TEST(Png, RejectsWrongChannelLayout) {
  testing::TempDir tmp;
  write_png(tmp.path() / "m.png", LabelMask(3, 3, 1));
  write_png(tmp.path() / "i.png", Image(3, 3, 1));
  EXPECT_THROW(read_png_image(tmp.path() / "m.png"), IoError);
  EXPECT_THROW(read_png_mask(tmp.path() / "i.png"), IoError);
}

TEST(Png, MissingOrCorruptFileIsIoError) {
  testing::TempDir tmp;
  EXPECT_THROW(read_png_mask(tmp.path() / "nope.png"), IoError);
  std::ofstream(tmp.path() / "bad.png") << "not a png";
  EXPECT_THROW(read_png_image(tmp.path() / "bad.png"), IoError);
}

// Round-trip property over random datasets, including the ignore sentinel
// and non-square shapes.
TEST(DatasetDirectory, RoundTripIsIdentical) {
  testing::Gen gen(17);
  for (int trial = 0; trial < 10; ++trial) {
    testing::TempDir tmp;
    Dataset d = gen.dataset(gen.integer(1, 4), gen.integer(1, 30), gen.integer(1, 12),
                            gen.integer(1, 12), gen.coin() ? Split::kTrain : Split::kTest);
    save_dataset(d, tmp.path());
    EXPECT_EQ(load_dataset(tmp.path()), d);
  }
}

TEST(DatasetDirectory, ManifestKeepsSampleOrder) {
  testing::TempDir tmp;
  Dataset d;
  d.num_classes = 2;
  for (const char* id : {"zeta", "alpha", "mid"}) d.samples.push_back({id, Image(2, 2), LabelMask(2, 2)});
  save_dataset(d, tmp.path());
  const Dataset back = load_dataset(tmp.path());
  ASSERT_EQ(back.samples.size(), 3u);
  EXPECT_EQ(back.samples[0].id, "zeta");
  EXPECT_EQ(back.samples[2].id, "mid");
}

TEST(DatasetDirectory, RejectsUnsafeIds) {
  testing::TempDir tmp;
  Dataset d;
  d.num_classes = 2;
  d.samples.push_back({"../escape", Image(2, 2), LabelMask(2, 2)});
  EXPECT_THROW(save_dataset(d, tmp.path()), InputError);
  EXPECT_FALSE(is_valid_sample_id(".hidden"));
  EXPECT_TRUE(is_valid_sample_id("train_000001"));
}

TEST(DatasetDirectory, WrongManifestFormat) {
  testing::TempDir tmp;
  MaskSet set{3, Split::kTest, {"a"}, {LabelMask(2, 2, 1)}};
  save_mask_set(set, tmp.path());
  EXPECT_THROW(load_dataset(tmp.path()), InputError);
  const MaskSet back = load_mask_set(tmp.path());
  EXPECT_EQ(back.ids, set.ids);
  EXPECT_EQ(back.masks, set.masks);
}

}  // namespace
}  // namespace segpoison
