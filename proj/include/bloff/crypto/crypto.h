#ifndef BLOFF_CRYPTO_CRYPTO_H_
#define BLOFF_CRYPTO_CRYPTO_H_

#include <filesystem>
#include <string>

#include "bloff/common/bytes.h"

namespace bloff {

struct DigestTag;
struct PublicKeyTag;
struct SecretKeyTag;
struct SignatureTag;

// SHA-256 output. Log hashes, tx ids, block hashes and Merkle nodes are all
// Digests.
using Digest = FixedBytes<32, DigestTag>;
// Ed25519 verification key.
using PublicKey = FixedBytes<32, PublicKeyTag>;
// Ed25519 32-byte seed; the expanded key is derived on demand.
using SecretKey = FixedBytes<32, SecretKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;

struct KeyPair {
  SecretKey secret_key;
  PublicKey public_key;

  friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

Digest sha256_digest(ByteView data);
inline Digest sha256_digest(std::string_view data) {
  return sha256_digest(as_bytes(data));
}

// Deterministic: the seed is the Ed25519 secret key. Throws
// Error("bad-seed-length") unless the seed is 32 bytes.
KeyPair generate_keypair(ByteView seed);
// Seed drawn from the system CSPRNG.
KeyPair generate_random_keypair();

// Ed25519 is deterministic, so sign(sk, m) == sign(sk, m).
Signature sign(const SecretKey& secret_key, ByteView message);

// Total: malformed keys or signatures yield false, never an exception.
bool verify_signature(const PublicKey& public_key,
                      ByteView message,
                      const Signature& sig);
bool verify_signature(ByteView public_key, ByteView message, ByteView sig);

// First 8 bytes of sha256(public_key), hex. Display only.
std::string node_short_id(const PublicKey& public_key);

// Key file: "secret: <64 hex>\npublic: <64 hex>\n".
std::string format_key_file(const KeyPair& keys);
// Throws Error("bad-key-file") on any deviation from the format, including
// a public key that does not match the secret.
KeyPair parse_key_file(std::string_view text);
KeyPair read_key_file(const std::filesystem::path& path);
void write_key_file(const std::filesystem::path& path, const KeyPair& keys);

}  // namespace bloff

#endif  // BLOFF_CRYPTO_CRYPTO_H_
