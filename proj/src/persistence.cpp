#include "nlim/persistence.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "nlim/error.hpp"

namespace nlim {

using json = nlohmann::json;

namespace {

constexpr std::uint8_t kMagic[4] = {'N', 'L', 'I', 'M'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

json vocab_json(const auto& names) {
  json arr = json::array();
  for (auto n : names) arr.push_back(std::string(n));
  return arr;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_model(const ParamStore& params, const ArchSpec& arch) {
  if (params.empty()) throw Error(ErrorCode::IncompleteModel, "empty parameter store");
  try {
    check_params(params, arch);
  } catch (const Error& e) {
    throw Error(ErrorCode::IncompleteModel, e.detail());
  }

  json index = json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : params) {
    index.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
    offset += 4 * t.size();
  }
  const json header = {{"arch", std::string(arch_name(arch.kind))},
                       {"hidden", arch.hidden},
                       {"char_dim", kCharDim},
                       {"tag_dim", kTagDim},
                       {"intent_dim", kIntentDim},
                       {"tags", vocab_json(tag_names())},
                       {"intents", vocab_json(intent_names())},
                       {"tensors", std::move(index)}};
  const std::string header_text = header.dump() + "\n";

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(12 + header_text.size() + offset);
  put_u32(out, kModelFormatVersion);
  for (char c : header_text) out.push_back(static_cast<std::uint8_t>(c));
  for (const auto& [name, t] : params) {
    for (double x : t.data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  }
  put_u32(out, crc32(std::span(out).subspan(8)));
  return out;
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, "not an NLIM model file");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kModelFormatVersion) throw Error(ErrorCode::BadVersion, "format version " + std::to_string(version));
  const auto body = bytes.subspan(8, bytes.size() - 12);
  if (crc32(body) != get_u32(bytes, bytes.size() - 4)) throw Error(ErrorCode::ChecksumMismatch, "CRC-32 mismatch");

  const auto newline = std::find(body.begin(), body.end(), std::uint8_t{'\n'});
  if (newline == body.end()) throw Error(ErrorCode::IncompleteModel, "unterminated header");
  const std::string header_text(body.begin(), newline);
  const auto payload = body.subspan(static_cast<std::size_t>(newline - body.begin()) + 1);

  LoadedModel model;
  try {
    const json header = json::parse(header_text);
    if (header.at("tags") != vocab_json(tag_names()) || header.at("intents") != vocab_json(intent_names()) ||
        header.at("char_dim").get<int>() != kCharDim || header.at("tag_dim").get<int>() != kTagDim ||
        header.at("intent_dim").get<int>() != kIntentDim) {
      throw Error(ErrorCode::VocabMismatch, "vocabulary tables differ from this build");
    }
    const auto kind = arch_from_name(header.at("arch").get<std::string>());
    if (!kind) throw Error(ErrorCode::InvalidArch, header.at("arch").get<std::string>());
    model.arch = {*kind, header.at("hidden").get<int>()};

    std::size_t expected_offset = 0;
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      Tensor t(entry.at("shape").get<std::vector<std::size_t>>());
      const auto offset = entry.at("offset").get<std::size_t>();
      if (offset != expected_offset || offset + 4 * t.size() > payload.size()) {
        throw Error(ErrorCode::IncompleteModel, "bad offset for tensor " + name);
      }
      for (std::size_t i = 0; i < t.size(); ++i) {
        t.data[i] = std::bit_cast<float>(get_u32(payload, offset + 4 * i));
      }
      expected_offset = offset + 4 * t.size();
      if (!model.params.emplace(name, std::move(t)).second) {
        throw Error(ErrorCode::IncompleteModel, "duplicate tensor " + name);
      }
    }
    if (expected_offset != payload.size()) throw Error(ErrorCode::IncompleteModel, "trailing payload bytes");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IncompleteModel, std::string("header: ") + e.what());
  }
  try {
    check_params(model.params, model.arch);
  } catch (const Error& e) {
    throw Error(ErrorCode::IncompleteModel, e.detail());
  }
  return model;
}

std::size_t save_model(const ParamStore& params, const ArchSpec& arch, const std::filesystem::path& path) {
  const auto bytes = serialize_model(params, arch);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return bytes.size();
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

ParamStore round_to_float(const ParamStore& params) {
  ParamStore out = params;
  for (auto& [name, t] : out) {
    for (double& x : t.data) x = static_cast<float>(x);
  }
  return out;
}

}  // namespace nlim
