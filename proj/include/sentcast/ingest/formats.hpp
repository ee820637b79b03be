#pragma once

#include <sentcast/core/decimal.hpp>
#include <sentcast/core/error.hpp>
#include <sentcast/core/types.hpp>

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

namespace sentcast::ingest {

namespace detail {

inline std::int64_t counter_field(const nlohmann::json& j, const char* name) {
    const auto& v = j.at(name);
    if (v.is_number_integer()) {
        return v.get<std::int64_t>();
    }
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (!std::isfinite(d) || d != std::floor(d)) {
            throw DataError(std::string(name) + " is not an integer");
        }
        return static_cast<std::int64_t>(d);
    }
    throw DataError(std::string(name) + " is not a number");
}

} // namespace detail

/// One JSON Lines record: `id, text, user_followers, likes, retweets, created_at`.
/// Throws DataError on anything unusable, including negative counters.
inline Tweet parse_tweet_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("tweet line is not valid JSON: ") + e.what());
    }
    try {
        Tweet t;
        const auto& id = j.at("id");
        t.id = id.is_string() ? id.get<std::string>() : id.dump();
        t.text = j.at("text").get<std::string>();
        t.follower_count = detail::counter_field(j, "user_followers");
        t.like_count = detail::counter_field(j, "likes");
        t.retweet_count = detail::counter_field(j, "retweets");
        t.created_at = parse_timestamp(j.at("created_at").get<std::string>());
        validate(t);
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("tweet record is missing or mistypes a field: ") + e.what());
    }
}

inline std::string format_tweet_line(const Tweet& t) {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["text"] = t.text;
    j["user_followers"] = t.follower_count;
    j["likes"] = t.like_count;
    j["retweets"] = t.retweet_count;
    j["created_at"] = format_timestamp(t.created_at);
    return j.dump();
}

inline constexpr std::string_view kPriceHeader = "time,open,high,low,close";

namespace detail {

inline double parse_price(std::string_view field) {
    while (!field.empty() && field.front() == ' ') {
        field.remove_prefix(1);
    }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw DataError("price field is not a decimal: '" + std::string(field) + "'");
    }
    return v;
}

} // namespace detail

/// One CSV data row `time,open,high,low,close`.
inline PriceBar parse_price_line(std::string_view line) {
    std::array<std::string_view, 5> fields;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (count == fields.size()) {
            throw DataError("price row has more than 5 fields");
        }
        fields[count++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    if (count != 5) {
        throw DataError("price row needs 5 fields");
    }
    auto time = fields[0];
    while (!time.empty() && time.back() == ' ') {
        time.remove_suffix(1);
    }
    PriceBar b{window_key(parse_timestamp(time)), detail::parse_price(fields[1]), detail::parse_price(fields[2]),
               detail::parse_price(fields[3]), detail::parse_price(fields[4])};
    validate(b);
    return b;
}

inline std::string format_price_line(const PriceBar& b) {
    return format_window(b.window) + "," + format_decimal(b.open) + "," + format_decimal(b.high) + "," +
           format_decimal(b.low) + "," + format_decimal(b.close);
}

inline bool is_price_header(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
        line.remove_suffix(1);
    }
    return line == kPriceHeader;
}

} // namespace sentcast::ingest
