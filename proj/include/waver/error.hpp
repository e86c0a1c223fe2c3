#pragma once

#include <stdexcept>
#include <string>

namespace waver {

enum class errc {
    // validation / usage
    dimension_mismatch,
    zero_norm,
    empty_input,
    not_scalar,
    empty_caption,
    empty_phrase,
    empty_vocab,
    non_square,
    non_positive_temperature,
    insufficient_data,
    invalid_config,
    // data / file
    unknown_id,
    unknown_caption,
    parse_error,
    dangling_reference,
    bad_magic,
    truncated_file,
    shape_overflow,
    index_out_of_range,
    io_error,
    // numeric
    non_finite,
};

class error : public std::runtime_error {
public:
    error(errc code, const std::string & what) : std::runtime_error(what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

// Process exit classes: 0 ok, 2 usage/validation, 3 data, 4 numeric.
inline int exit_code_for(errc code) {
    switch (code) {
        case errc::unknown_id:
        case errc::unknown_caption:
        case errc::parse_error:
        case errc::dangling_reference:
        case errc::bad_magic:
        case errc::truncated_file:
        case errc::shape_overflow:
        case errc::index_out_of_range:
        case errc::io_error:
            return 3;
        case errc::non_finite:
            return 4;
        default:
            return 2;
    }
}

} // namespace waver
