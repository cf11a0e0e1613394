#include "asep/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "asep/errors.hpp"

#ifndef ASEP_VERSION
#define ASEP_VERSION "0.0.0"
#endif

namespace asep {

const char* version() { return ASEP_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1)
    throw UnsupportedError("SHA-256 digest unavailable");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"arguments", arguments},
          {"parameters", parameters},
          {"seed", seed},
          {"version", version},
          {"wall_seconds", wall_seconds},
          {"output_digest", output_digest},
          {"deterministic", deterministic}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::vector<std::string>>();
    m.parameters = j.value("parameters", nlohmann::json::object());
    m.seed = j.value("seed", std::uint64_t{0});
    m.version = j.value("version", std::string{});
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.output_digest = j.at("output_digest").get<std::string>();
    m.deterministic = j.value("deterministic", true);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed run manifest: ") + e.what());
  }
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read manifest " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DomainError("manifest " + path + " is not valid JSON: " + e.what());
  }
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write manifest " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace asep
