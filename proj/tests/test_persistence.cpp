#include <doctest.h>

#include <bit>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nlim/error.hpp"
#include "nlim/persistence.hpp"
#include "support.hpp"

using namespace nlim;

namespace {

ErrorCode load_code(std::span<const std::uint8_t> bytes) {
  try {
    deserialize_model(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoFailure;  // loaded fine; no test expects this value
}

std::size_t header_length(const std::vector<std::uint8_t>& bytes) {
  return static_cast<std::size_t>(std::find(bytes.begin() + 8, bytes.end(), '\n') - (bytes.begin() + 8)) + 1;
}

// Rewrites the header and recomputes the trailing checksum.
std::vector<std::uint8_t> with_header(const std::vector<std::uint8_t>& bytes, const nlohmann::json& header) {
  const std::size_t hl = header_length(bytes);
  const std::string text = header.dump() + "\n";
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), bytes.begin() + 8 + static_cast<std::ptrdiff_t>(hl), bytes.end() - 4);
  const std::uint32_t c = crc32(std::span(out).subspan(8));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(c >> (8 * i)));
  return out;
}

nlohmann::json header_of(const std::vector<std::uint8_t>& bytes) {
  return nlohmann::json::parse(std::string(bytes.begin() + 8, bytes.begin() + 8 + header_length(bytes) - 1));
}

}  // namespace

TEST_CASE("crc32 check values") {
  const std::string s = "123456789";
  CHECK(crc32(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == 0xCBF43926u);
  CHECK(crc32({}) == 0u);
}

TEST_CASE("round trip for every kind") {
  const auto dir = test::scratch_dir("persistence");
  for (ArchKind kind : kAllArchKinds) {
    CAPTURE(arch_name(kind));
    const ArchSpec arch{kind, 16};
    const ParamStore params = build(arch, 5);
    const auto path = dir / (std::string(arch_name(kind)) + ".bin");
    const std::size_t written = save_model(params, arch, path);
    CHECK(written == std::filesystem::file_size(path));

    const auto bytes = serialize_model(params, arch);
    CHECK(bytes.size() == written);
    CHECK(bytes.size() == 12 + header_length(bytes) + 4 * parameter_count(arch));
    CHECK(bytes == serialize_model(params, arch));

    const LoadedModel m = load_model(path);
    CHECK(m.arch == arch);
    CHECK(m.params == round_to_float(params));
    // Stored values are exactly representable, so a second save is byte-identical.
    CHECK(serialize_model(m.params, m.arch) == bytes);

    const auto h = header_of(bytes);
    CHECK(h["arch"] == arch_name(kind));
    CHECK(h["tags"].size() == 19);
    CHECK(h["intents"].size() == 8);
    CHECK(h["tags"][0] == "START");
  }
}

TEST_CASE("payload is little-endian float32 in index order") {
  const ArchSpec arch{ArchKind::SingleIntent, 8};
  ParamStore params = build(arch, 1);
  params.at("cls.out.b").data[0] = 1.5;
  const auto bytes = serialize_model(params, arch);
  const auto h = header_of(bytes);
  const std::size_t payload = 8 + header_length(bytes);
  for (const auto& entry : h["tensors"]) {
    if (entry["name"] != "cls.out.b") continue;
    const std::size_t at = payload + entry["offset"].get<std::size_t>();
    CHECK(bytes[at] == 0x00);
    CHECK(bytes[at + 1] == 0x00);
    CHECK(bytes[at + 2] == 0xC0);
    CHECK(bytes[at + 3] == 0x3F);
  }
}

TEST_CASE("malformed files are rejected with the right error") {
  const ArchSpec arch{ArchKind::S2sMtl, 8};
  const auto bytes = serialize_model(build(arch, 2), arch);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(load_code(bad_magic) == ErrorCode::BadMagic);
  CHECK(load_code(std::vector<std::uint8_t>{'N', 'L'}) == ErrorCode::BadMagic);

  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK(load_code(bad_version) == ErrorCode::BadVersion);

  auto h = header_of(bytes);
  h["tags"].push_back("EXTRA");
  CHECK(load_code(with_header(bytes, h)) == ErrorCode::VocabMismatch);
  h = header_of(bytes);
  std::swap(h["intents"][1], h["intents"][2]);
  CHECK(load_code(with_header(bytes, h)) == ErrorCode::VocabMismatch);
  h = header_of(bytes);
  h["tensors"].erase(h["tensors"].size() - 1);
  CHECK(load_code(with_header(bytes, h)) == ErrorCode::IncompleteModel);
  h = header_of(bytes);
  h["arch"] = "cnn";
  CHECK(load_code(with_header(bytes, h)) == ErrorCode::InvalidArch);

  auto truncated = std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 40);
  const std::uint32_t c = crc32(std::span(truncated).subspan(8));
  for (int i = 0; i < 4; ++i) truncated.push_back(static_cast<std::uint8_t>(c >> (8 * i)));
  CHECK(load_code(truncated) == ErrorCode::IncompleteModel);

  CHECK_THROWS_AS(serialize_model({}, arch), Error);
  ParamStore partial = build(arch, 2);
  partial.erase("dec.out.b");
  try {
    serialize_model(partial, arch);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompleteModel);
  }
  CHECK_THROWS_AS(load_model(test::scratch_dir("missing") / "nope.bin"), Error);
}

TEST_CASE("every single-byte corruption is detected") {
  const ArchSpec arch{ArchKind::S2sMtl, 8};
  const auto bytes = serialize_model(build(arch, 3), arch);
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    auto copy = bytes;
    const std::size_t at = 8 + rng.below(bytes.size() - 8);
    copy[at] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    CHECK(load_code(copy) == ErrorCode::ChecksumMismatch);
  }
}

TEST_CASE("float storage perturbs predictions only slightly") {
  const ArchSpec arch{ArchKind::S2sMtl, 32};
  const ParamStore params = build(arch, 8);
  const ParamStore stored = round_to_float(params);
  Rng rng(6);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const std::string text = test::random_ascii(rng, 1, 30);
    const auto a = predict(params, arch, text);
    const auto b = predict(stored, arch, text);
    for (int i = 0; i < kIntentDim; ++i) worst = std::max(worst, std::abs((*a.intent_probs)[i] - (*b.intent_probs)[i]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("a reloaded model predicts exactly like the stored weights") {
  const ArchSpec arch{ArchKind::MtlE2e, 16};
  const ParamStore params = build(arch, 12);
  const LoadedModel m = deserialize_model(serialize_model(params, arch));
  const ParamStore stored = round_to_float(params);
  Rng rng(2);
  for (int k = 0; k < 10; ++k) {
    const std::string text = test::random_ascii(rng, 1, 25);
    const auto a = predict(m.params, m.arch, text);
    const auto b = predict(stored, arch, text);
    CHECK(a.tags == b.tags);
    CHECK(*a.intent_probs == *b.intent_probs);
  }
}

TEST_CASE("a tensor inventory that does not fit the arch is incomplete") {
  const ArchSpec arch{ArchKind::S2sMtl, 8};
  const auto bytes = serialize_model(build(arch, 2), arch);
  auto h = header_of(bytes);
  h["arch"] = "s2s-tagger";
  CHECK(load_code(with_header(bytes, h)) == ErrorCode::IncompleteModel);
}

TEST_CASE("vocabulary tables") {
  const auto dir = test::scratch_dir("vocab");
  write_vocab_tables(dir);
  std::ifstream tags(dir / "tags.txt");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(tags, line)) lines.push_back(line);
  REQUIRE(lines.size() == 19);
  CHECK(lines[0] == "0\tSTART");
  CHECK(lines[18] == "18\tNEWS_TOPIC");
  std::ifstream intents(dir / "intents.txt");
  lines.clear();
  while (std::getline(intents, line)) lines.push_back(line);
  REQUIRE(lines.size() == 8);
  CHECK(lines[7] == "7\tSELL");
}
