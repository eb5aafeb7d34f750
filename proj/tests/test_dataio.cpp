#include "rtrack/dataio.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using rtrack::BBox;
using rtrack::testing::TempDir;

namespace {

void write_text(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_jpeg(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(rtrack::detail::kPlaceholderJpeg.data()),
            static_cast<std::streamsize>(rtrack::detail::kPlaceholderJpeg.size()));
}

// Three frames, two targets, one expression; image size from the JPEG header.
void make_fixture(const fs::path& root, int rgb = 3, int thermal = 3) {
  for (int f = 1; f <= rgb; ++f) write_jpeg(root / "visible" / rtrack::frame_filename(f));
  for (int f = 1; f <= thermal; ++f) write_jpeg(root / "infrared" / rtrack::frame_filename(f));
  write_text(root / "gt.txt",
             "1,1,1,1,3,4,1,1,1\n1,2,0,0,2,2,1,1,1\n2,1,2,1,3,4,1,1,1\n3,1,3,1,3,4,1,1,1,extra\n");
  write_text(root / "expressions.json",
             R"({"expressions":[{"expression":"the left person","targets":[{"id":1,"frames":[[1,3]]}]}]})");
}

template <class F>
rtrack::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const rtrack::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return rtrack::ErrorCode::InvalidConfig;
}

}  // namespace

TEST(ParseMotLine, CornerConversion) {
  const auto e = rtrack::parse_mot_line("1,1,10,10,20,30,1,-1,-1,-1", 1);
  EXPECT_EQ(e.frame, 1);
  EXPECT_EQ(e.id, 1);
  EXPECT_EQ(e.box, (BBox{10, 10, 30, 40}));
  EXPECT_EQ(e.cls, -1);
  ASSERT_EQ(e.extra.size(), 1u);
  EXPECT_EQ(e.extra[0], "-1");
}

TEST(ParseMotLine, MalformedLinesReportLineNumber) {
  for (const char* bad : {"1,1,10,10,20", "1,x,10,10,20,30", "0,1,1,1,1,1", "1,1,1,1,-2,3", "1.5,1,1,1,1,1"}) {
    try {
      rtrack::parse_mot_line(bad, 42);
      FAIL() << bad;
    } catch (const rtrack::Error& e) {
      EXPECT_EQ(e.code(), rtrack::ErrorCode::ParseError);
      EXPECT_NE(std::string(e.what()).find("line 42"), std::string::npos);
    }
  }
}

TEST(LoadSequence, WellFormedFixture) {
  TempDir dir;
  make_fixture(dir.path() / "seq01");
  const auto s = rtrack::load_sequence(dir.path() / "seq01");
  EXPECT_EQ(s.manifest.frame_count, 3);
  EXPECT_EQ(s.manifest.name, "seq01");
  EXPECT_EQ(s.manifest.dims, (rtrack::ImageDims{8, 8}));
  EXPECT_EQ(s.manifest.rgb_frames.at(1).filename(), "000002.jpg");
  EXPECT_EQ(s.gt.at(1).size(), 2u);
  EXPECT_EQ(s.gt.at(3).at(0).extra.at(0), "extra");
  ASSERT_EQ(s.expressions.size(), 1u);
  EXPECT_TRUE(s.expressions[0].target(1)->covers(2));
  EXPECT_EQ(s.expressions[0].target(2), nullptr);

  const auto egt = rtrack::expression_ground_truth(s, s.expressions[0]);
  EXPECT_EQ(egt.box_count(), 3u);
  EXPECT_EQ(egt.name, "seq01/the-left-person");
}

TEST(LoadSequence, SeqInfoOverridesNameAndDims) {
  TempDir dir;
  make_fixture(dir.path());
  write_text(dir.path() / "seqinfo.json", R"({"name":"night","image_width":640,"image_height":512})");
  const auto s = rtrack::load_sequence(dir.path());
  EXPECT_EQ(s.manifest.name, "night");
  EXPECT_EQ(s.manifest.dims, (rtrack::ImageDims{640, 512}));
}

TEST(LoadSequence, AlignmentViolation) {
  TempDir dir;
  make_fixture(dir.path(), 3, 2);
  EXPECT_EQ(code_of([&] { rtrack::load_sequence(dir.path()); }), rtrack::ErrorCode::AlignmentViolation);
}

TEST(LoadSequence, MissingPieces) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { rtrack::load_sequence(dir.path() / "nope"); }), rtrack::ErrorCode::SequenceLoad);
  make_fixture(dir.path());
  fs::remove(dir.path() / "expressions.json");
  EXPECT_EQ(code_of([&] { rtrack::load_sequence(dir.path()); }), rtrack::ErrorCode::SequenceLoad);
}

TEST(LoadSequence, MalformedGroundTruth) {
  TempDir dir;
  make_fixture(dir.path());
  write_text(dir.path() / "gt.txt", "1,1,1,1,3,4\n2,1,oops,1,3,4\n");
  try {
    rtrack::load_sequence(dir.path());
    FAIL();
  } catch (const rtrack::Error& e) {
    EXPECT_EQ(e.code(), rtrack::ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadSequence, ExpressionRangeOutsideSequence) {
  TempDir dir;
  make_fixture(dir.path());
  write_text(dir.path() / "expressions.json",
             R"({"expressions":[{"expression":"x","targets":[{"id":1,"frames":[[1,9]]}]}]})");
  EXPECT_EQ(code_of([&] { rtrack::load_sequence(dir.path()); }), rtrack::ErrorCode::ParseError);
}

TEST(ListSequences, SingleAndNested) {
  TempDir dir;
  make_fixture(dir.path() / "b");
  make_fixture(dir.path() / "a");
  const auto all = rtrack::list_sequences(dir.path());
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].filename(), "a");
  EXPECT_EQ(rtrack::list_sequences(dir.path() / "a").size(), 1u);
}

TEST(ExpressionSlug, Normalizes) {
  EXPECT_EQ(rtrack::expression_slug("The  person, on the LEFT!"), "the-person-on-the-left");
  EXPECT_EQ(rtrack::expression_slug("***"), "expression");
}

TEST(WriteResults, EmptyResultGivesEmptyFile) {
  TempDir dir;
  rtrack::TrackingResult r;
  r.frame_count = 5;
  rtrack::write_results(r, dir.path() / "out.txt");
  EXPECT_EQ(read_text(dir.path() / "out.txt"), "");
}

TEST(WriteResults, TwoDecimalFormatting) {
  TempDir dir;
  rtrack::TrackingResult r;
  r.frame_count = 1;
  r.frames[1].push_back({3, {10.456, 0, 20.0, 5.0}});
  rtrack::write_results(r, dir.path() / "out.txt");
  EXPECT_EQ(read_text(dir.path() / "out.txt"), "1,3,10.46,0.00,9.54,5.00,1.0,-1,-1,-1\n");
}

TEST(WriteResults, RoundTripWithinQuantum) {
  TempDir dir;
  std::mt19937_64 rng(6);
  rtrack::TrackingResult r;
  r.name = "rt";
  r.frame_count = 50;
  r.dims = {640, 512};
  for (int f = 1; f <= 50; ++f)
    for (int id = 1; id <= 4; ++id)
      if ((f + id) % 3) r.frames[f].push_back({id, rtrack::testing::random_box(rng, 500)});
  const auto path = dir.path() / "deep" / "r.txt";
  rtrack::write_results(r, path);
  const auto back = rtrack::load_results(path, r.name, r.frame_count, r.dims);
  ASSERT_EQ(back.box_count(), r.box_count());
  for (const auto& [f, boxes] : r.frames) {
    const auto& got = back.at(f);
    ASSERT_EQ(got.size(), boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      EXPECT_EQ(got[i].id, boxes[i].id);
      EXPECT_NEAR(got[i].box.x1, boxes[i].box.x1, 0.01);
      EXPECT_NEAR(got[i].box.y1, boxes[i].box.y1, 0.01);
      EXPECT_NEAR(got[i].box.x2, boxes[i].box.x2, 0.01);
      EXPECT_NEAR(got[i].box.y2, boxes[i].box.y2, 0.01);
    }
  }
}

TEST(Synth, ZeroVelocityIsStatic) {
  rtrack::SynthConfig c;
  c.n_targets = 1;
  c.n_frames = 20;
  c.speed_min = c.speed_max = 0.0;
  const auto gt = rtrack::synth_ground_truth(c);
  for (int f = 2; f <= 20; ++f) EXPECT_EQ(gt.at(f).at(0).box, gt.at(1).at(0).box);
}

TEST(Synth, SameSeedByteIdentical) {
  TempDir a, b;
  rtrack::SynthConfig c;
  rtrack::synth_generate(c, a.path());
  rtrack::synth_generate(c, b.path());
  EXPECT_EQ(read_text(a.path() / "gt.txt"), read_text(b.path() / "gt.txt"));
  EXPECT_EQ(read_text(a.path() / "expressions.json"), read_text(b.path() / "expressions.json"));
  c.seed = 43;
  TempDir d;
  rtrack::synth_generate(c, d.path());
  EXPECT_NE(read_text(a.path() / "gt.txt"), read_text(d.path() / "gt.txt"));
}

TEST(Synth, BounceMatchesReplayedKinematics) {
  rtrack::SynthConfig c;
  c.n_targets = 2;
  c.n_frames = 100;
  c.speed_min = c.speed_max = 3.0;
  c.seed = 5;
  const auto gt = rtrack::synth_ground_truth(c);

  // Independent replay: reflect position and velocity per axis.
  auto targets = rtrack::synth_spawn(c);
  bool bounced = false;
  for (int f = 1; f <= 100; ++f) {
    for (std::size_t k = 0; k < targets.size(); ++k) {
      auto& t = targets[k];
      if (f > 1) {
        double x = t.x + t.vx, y = t.y + t.vy;
        const double mx = c.dims.width - t.w, my = c.dims.height - t.h;
        if (x < 0) x = -x, t.vx = -t.vx, bounced = true;
        if (x > mx) x = 2 * mx - x, t.vx = -t.vx, bounced = true;
        if (y < 0) y = -y, t.vy = -t.vy, bounced = true;
        if (y > my) y = 2 * my - y, t.vy = -t.vy, bounced = true;
        t.x = x, t.y = y;
      }
      const auto& b = gt.at(f).at(k).box;
      EXPECT_NEAR(b.x1, t.x, 1e-9);
      EXPECT_NEAR(b.y1, t.y, 1e-9);
      EXPECT_GE(b.x1, 0.0);
      EXPECT_GE(b.y1, 0.0);
      EXPECT_LE(b.x2, c.dims.width);
      EXPECT_LE(b.y2, c.dims.height);
    }
  }
  EXPECT_TRUE(bounced);
}

TEST(Synth, GeneratedSequenceLoadsBack) {
  TempDir dir;
  rtrack::SynthConfig c;
  c.n_frames = 30;
  const auto gt = rtrack::synth_generate(c, dir.path());
  const auto s = rtrack::load_sequence(dir.path());
  EXPECT_EQ(s.manifest.frame_count, 30);
  EXPECT_EQ(s.manifest.name, "synth");
  EXPECT_EQ(s.manifest.dims, c.dims);
  ASSERT_EQ(s.expressions.size(), 1u);
  EXPECT_EQ(s.expressions[0].expression, rtrack::kSynthExpression);
  for (int f = 1; f <= 30; ++f) {
    ASSERT_EQ(s.gt.at(f).size(), gt.at(f).size());
    for (std::size_t i = 0; i < gt.at(f).size(); ++i) {
      EXPECT_NEAR(s.gt.at(f)[i].box.x1, gt.at(f)[i].box.x1, 0.01);
      EXPECT_NEAR(s.gt.at(f)[i].box.y2, gt.at(f)[i].box.y2, 0.01);
      EXPECT_TRUE(s.expressions[0].target(s.gt.at(f)[i].id)->covers(f));
    }
  }
}

TEST(Synth, InvalidConfigRejected) {
  rtrack::SynthConfig c;
  c.size_max = 1000;
  EXPECT_THROW(rtrack::synth_ground_truth(c), rtrack::Error);
}
