#include "flsentry/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace flsentry {

std::string sha256_hex(std::span<const unsigned char> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &digest_len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256: digest computation failed");
    }
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * digest_len);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

namespace {

void append_le64(std::vector<unsigned char>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

} // namespace

std::string commit_vector(std::uint64_t modulus, int scale_bits,
                          std::span<const std::uint64_t> raw_values) {
    std::vector<unsigned char> buf;
    buf.reserve(24 + 8 * raw_values.size());
    append_le64(buf, modulus);
    append_le64(buf, static_cast<std::uint64_t>(scale_bits));
    append_le64(buf, raw_values.size());
    for (std::uint64_t v : raw_values) append_le64(buf, v);
    return sha256_hex(buf);
}

} // namespace flsentry
