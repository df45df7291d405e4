#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace subperf {

/// Exam performance bucket. Declaration order is the reporting order.
enum class Category : std::uint8_t { PP = 0, SP = 1, GP = 2 };

inline constexpr std::size_t kCategoryCount = 3;
inline constexpr std::array<Category, kCategoryCount> kCategories{Category::PP, Category::SP,
                                                                  Category::GP};

constexpr std::size_t index_of(Category c) noexcept { return static_cast<std::size_t>(c); }

constexpr std::string_view to_string(Category c) noexcept {
    switch (c) {
        case Category::PP: return "PP";
        case Category::SP: return "SP";
        case Category::GP: return "GP";
    }
    return "?";
}

constexpr std::optional<Category> parse_category(std::string_view s) noexcept {
    if (s == "PP") return Category::PP;
    if (s == "SP") return Category::SP;
    if (s == "GP") return Category::GP;
    return std::nullopt;
}

using ClassCounts = std::array<std::size_t, kCategoryCount>;

}  // namespace subperf
