#include "bloff/crypto/crypto.h"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "bloff/common/error.h"

namespace bloff {

namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

PkeyPtr private_key_from_seed(const SecretKey& seed) {
  return PkeyPtr(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                              seed.data(), seed.size()));
}

}  // namespace

Digest sha256_digest(ByteView data) {
  Digest out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != Digest::kSize) {
    throw Error("crypto-failure", "EVP_Digest");
  }
  return out;
}

KeyPair generate_keypair(ByteView seed) {
  auto secret = SecretKey::from_span(seed);
  if (!secret)
    throw Error("bad-seed-length",
                "expected 32 bytes, got " + std::to_string(seed.size()));
  PkeyPtr pkey = private_key_from_seed(*secret);
  if (!pkey)
    throw Error("crypto-failure", "EVP_PKEY_new_raw_private_key");
  KeyPair out;
  out.secret_key = *secret;
  size_t len = PublicKey::kSize;
  if (EVP_PKEY_get_raw_public_key(pkey.get(), out.public_key.data(), &len) !=
          1 ||
      len != PublicKey::kSize) {
    throw Error("crypto-failure", "EVP_PKEY_get_raw_public_key");
  }
  return out;
}

KeyPair generate_random_keypair() {
  SecretKey seed;
  if (RAND_bytes(seed.data(), static_cast<int>(seed.size())) != 1)
    throw Error("crypto-failure", "RAND_bytes");
  return generate_keypair(seed.span());
}

Signature sign(const SecretKey& secret_key, ByteView message) {
  PkeyPtr pkey = private_key_from_seed(secret_key);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!pkey || !ctx ||
      EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) !=
          1) {
    throw Error("crypto-failure", "EVP_DigestSignInit");
  }
  Signature sig;
  size_t len = Signature::kSize;
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(),
                     message.size()) != 1 ||
      len != Signature::kSize) {
    throw Error("crypto-failure", "EVP_DigestSign");
  }
  return sig;
}

bool verify_signature(const PublicKey& public_key,
                      ByteView message,
                      const Signature& sig) {
  PkeyPtr pkey(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                           public_key.data(),
                                           public_key.size()));
  if (!pkey)
    return false;
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx ||
      EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) !=
          1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), message.data(),
                          message.size()) == 1;
}

bool verify_signature(ByteView public_key, ByteView message, ByteView sig) {
  auto pk = PublicKey::from_span(public_key);
  auto s = Signature::from_span(sig);
  if (!pk || !s)
    return false;
  return verify_signature(*pk, message, *s);
}

std::string node_short_id(const PublicKey& public_key) {
  Digest d = sha256_digest(public_key.span());
  return to_hex(d.span().first(8));
}

std::string format_key_file(const KeyPair& keys) {
  return "secret: " + keys.secret_key.hex() + "\npublic: " +
         keys.public_key.hex() + "\n";
}

KeyPair parse_key_file(std::string_view text) {
  constexpr std::string_view kSecret = "secret: ";
  constexpr std::string_view kPublic = "public: ";
  // 8 + 64 + 1 per line.
  if (text.size() != 2 * (8 + 64 + 1) ||
      text.substr(0, 8) != kSecret || text[72] != '\n' ||
      text.substr(73, 8) != kPublic || text.back() != '\n') {
    throw Error("bad-key-file", "expected 'secret: <hex>' and 'public: <hex>'");
  }
  auto secret = SecretKey::from_hex(text.substr(8, 64));
  auto pub = PublicKey::from_hex(text.substr(81, 64));
  if (!secret || !pub)
    throw Error("bad-key-file", "keys must be 64 lowercase hex characters");
  KeyPair keys = generate_keypair(secret->span());
  if (keys.public_key != *pub)
    throw Error("bad-key-file", "public key does not match secret key");
  return keys;
}

KeyPair read_key_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("io-error", "cannot read key file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_key_file(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_key_file(const std::filesystem::path& path, const KeyPair& keys) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("io-error", "cannot write key file " + path.string());
  out << format_key_file(keys);
  out.close();
  if (!out)
    throw Error("io-error", "failed writing " + path.string());
  std::filesystem::permissions(path, std::filesystem::perms::owner_read |
                                         std::filesystem::perms::owner_write);
}

}  // namespace bloff
