#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mvc/bench.hpp"
#include "openssl_oracle.hpp"
#include "test_util.hpp"

using namespace mvc;
using namespace mvc::bench;

namespace {

struct PublishedRow {
  const char* label;
  double size_mb;
  double encrypt_ms;
  double storage_ms;
  double total_ms;
  double decrypt_ms;
};

// Reference measurements from an 8-core 2 GHz phone.
constexpr PublishedRow kPublished[] = {
    {"U-Squared Net", 2.5, 227, 17, 244, 203},   {"SSD Mobilenet", 4.2, 306, 37, 343, 279},
    {"Inception V2", 11.3, 720, 66, 786, 643},   {"EfficientNetB5", 16, 1054, 98, 1152, 894},
    {"MnasNet1.0", 17.5, 1106, 101, 1207, 933}, {"Inception V3", 23.9, 1960, 119, 2079, 1766},
};

std::vector<BenchRecord> published_records() {
  std::vector<BenchRecord> out;
  for (const auto& r : kPublished) {
    out.push_back(make_record(r.label, mb_to_bytes(r.size_mb), r.encrypt_ms, r.storage_ms, r.decrypt_ms));
  }
  return out;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(SyntheticModel, EngineMatchesStandardCheckValue) {
  std::mt19937_64 rng;
  rng.discard(9999);
  EXPECT_EQ(rng(), 9981545732273789042ULL);
}

TEST(SyntheticModel, GoldenDigests) {
  EXPECT_EQ(to_hex(sha256(generate_synthetic_model(2'621'440, 1))),
            "2e017495e9c7da2a752967b4f98a93a011dd37207d1b4f628b810cd3501d9444");
  EXPECT_EQ(to_hex(sha256(generate_synthetic_model(2'621'440, 2))),
            "7434f7730c9497c2ed6de2128511935f3368160657fe2527c1d311666d93db33");
  EXPECT_EQ(to_hex(sha256(generate_synthetic_model(1000, 42))),
            "0095010eff114dd6ac2bd107f1057b2b61485f71bc203b0147ee505173c1cad2");
  EXPECT_EQ(to_hex(generate_synthetic_model(13, 7)), "a7d966eb31651fc162c1347a54");
}

TEST(SyntheticModel, DeterministicAndSeedSensitive) {
  EXPECT_EQ(generate_synthetic_model(5000, 9), generate_synthetic_model(5000, 9));
  EXPECT_NE(generate_synthetic_model(5000, 9), generate_synthetic_model(5000, 10));
  EXPECT_TRUE(generate_synthetic_model(0, 1).empty());
  // A prefix of a longer stream.
  const Bytes long_one = generate_synthetic_model(100, 3);
  const Bytes short_one = generate_synthetic_model(37, 3);
  EXPECT_TRUE(std::equal(short_one.begin(), short_one.end(), long_one.begin()));
}

TEST(SizeConversion, BinaryMegabytes) {
  EXPECT_EQ(mb_to_bytes(2.5), 2'621'440u);
  EXPECT_EQ(mb_to_bytes(16), 16'777'216u);
  EXPECT_EQ(mb_to_bytes(23.9), 25'060'966u);
  EXPECT_THROW(mb_to_bytes(-1), RangeError);
}

TEST(FormatNumber, TrimsZeros) {
  EXPECT_EQ(format_number(2.5), "2.5");
  EXPECT_EQ(format_number(16), "16");
  EXPECT_EQ(format_number(0.1234), "0.123");
  EXPECT_EQ(format_number(-0.0001), "0");
  EXPECT_EQ(format_number(1207), "1207");
}

TEST(Median, OrderInvariant) {
  std::vector<double> v = {5, 1, 4, 2, 3};
  std::mt19937 rng(1);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(median(v), 3.0);
  }
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_EQ(median({7}), 7.0);
  EXPECT_THROW(median({}), RangeError);
}

TEST(FitLinear, ExactLineIsRecovered) {
  std::vector<BenchRecord> records;
  for (const double mb : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double t = 10.0 * mb + 5.0;
    records.push_back(make_record("m", mb_to_bytes(mb), t - 1.0, 1.0, t));
  }
  for (const auto series : {FitSeries::SealTotal, FitSeries::Decrypt}) {
    const FitResult fit = fit_linear(records, series);
    EXPECT_NEAR(fit.slope, 10.0, 1e-9);
    EXPECT_NEAR(fit.intercept, 5.0, 1e-9);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  }
}

TEST(FitLinear, PublishedMeasurementsGolden) {
  const auto records = published_records();
  const FitResult seal = fit_linear(records, FitSeries::SealTotal);
  EXPECT_NEAR(seal.slope, 80.44156321296677, 1e-9);
  EXPECT_NEAR(seal.intercept, -42.38230592861174, 1e-9);
  EXPECT_NEAR(seal.r_squared, 0.9607495169777764, 1e-12);

  const FitResult dec = fit_linear(records, FitSeries::Decrypt);
  EXPECT_NEAR(dec.slope, 66.64793516745178, 1e-9);
  EXPECT_NEAR(dec.intercept, -51.209047700282184, 1e-9);
  EXPECT_NEAR(dec.r_squared, 0.9305780175320933, 1e-12);
}

TEST(FitLinear, DegenerateInputs) {
  auto records = published_records();
  records.resize(2);
  EXPECT_THROW(fit_linear(records), DegenerateError);
  const std::vector<BenchRecord> same(4, make_record("x", 1000, 1, 1, 1));
  EXPECT_THROW(fit_linear(same), DegenerateError);
}

TEST(EmitTable, PublishedRowsReproduceTotals) {
  const std::string csv = emit_table(published_records(), TableFormat::Csv);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  for (const auto& r : kPublished) {
    ASSERT_TRUE(std::getline(in, line));
    std::vector<std::string> cells;
    std::istringstream cs(line);
    for (std::string c; std::getline(cs, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 6u) << line;
    EXPECT_EQ(cells[0], r.label);
    EXPECT_EQ(std::stod(cells[1]), r.size_mb);
    EXPECT_EQ(std::stod(cells[2]) + std::stod(cells[3]), std::stod(cells[4]));
    EXPECT_EQ(std::stod(cells[4]), r.total_ms);
    EXPECT_EQ(std::stod(cells[5]), r.decrypt_ms);
  }
  EXPECT_FALSE(std::getline(in, line));
}

TEST(EmitTable, LineCounts) {
  const auto records = published_records();
  EXPECT_EQ(count_lines(emit_table(records, TableFormat::Csv)), records.size() + 1);
  EXPECT_EQ(count_lines(emit_table(records, TableFormat::Markdown)), records.size() + 2);
  EXPECT_EQ(count_lines(emit_table({}, TableFormat::Csv)), 1u);
  EXPECT_EQ(count_lines(emit_table({}, TableFormat::Markdown)), 2u);
  const std::string md = emit_table(records, TableFormat::Markdown);
  EXPECT_NE(md.find("| Inception V3 | 23.9 | 1960 | 119 | 2079 | 1766 |"), std::string::npos);
}

TEST(RunBench, SmallSizesBothModes) {
  testutil::TempDir dir;
  for (const auto mode : {CipherMode::ChunkedCtr, CipherMode::RawEcbPkcs7}) {
    BenchOptions opts;
    opts.sizes_mb = {0.05, 0.1, 0.2};
    opts.repetitions = 3;
    opts.mode = mode;
    opts.chunk_size = 16'384;
    opts.work_dir = dir.path();
    const auto records = run_bench(opts);
    ASSERT_EQ(records.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(records[i].size_bytes, mb_to_bytes(opts.sizes_mb[i]));
      EXPECT_EQ(records[i].repetitions, 3u);
      EXPECT_DOUBLE_EQ(records[i].total_seal_ms, records[i].encrypt_ms + records[i].storage_ms);
      EXPECT_GT(records[i].encrypt_ms, 0.0);
      EXPECT_GT(records[i].decrypt_ms, 0.0);
    }
    EXPECT_NO_THROW(fit_linear(records));
    EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
  }
}

TEST(RunBench, RejectsTooFewRepetitions) {
  BenchOptions opts;
  opts.repetitions = 2;
  EXPECT_THROW(run_bench(opts), RangeError);
}
