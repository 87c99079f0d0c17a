#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/evp.h>

namespace helios::service {

// Opaque per-address identity: first 16 hex digits of SHA-256(salt ":" address).
inline std::string client_id(std::string_view salt, std::string_view remote_addr) {
  std::string material;
  material.reserve(salt.size() + 1 + remote_addr.size());
  material.append(salt).append(":").append(remote_addr);

  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(material.data(), material.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < 8 && i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace helios::service
