#include "ricenet/modality.hpp"

#include <algorithm>

#include "ricenet/errors.hpp"

namespace ricenet {

namespace {

// Bit i set = modality i selected; row k-1 is canonical combo k.
constexpr std::array<unsigned, 7> kComboBits{0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111};

unsigned bit(Modality m) { return 1u << static_cast<int>(m); }

} // namespace

const char* modality_key(Modality m) noexcept
{
    switch (m) {
    case Modality::PostOp: return "post_op";
    case Modality::Event: return "event";
    case Modality::Dose: return "dose";
    }
    return "?";
}

const char* modality_name(Modality m) noexcept
{
    switch (m) {
    case Modality::PostOp: return "POST_OP";
    case Modality::Event: return "EVENT";
    case Modality::Dose: return "DOSE";
    }
    return "?";
}

ModalityCombo ModalityCombo::from_index(int canonical_index)
{
    if (canonical_index < 1 || canonical_index > 7) {
        throw PreconditionError("modality combo index must be in 1..7, got " + std::to_string(canonical_index));
    }
    return ModalityCombo(canonical_index);
}

ModalityCombo ModalityCombo::from_modalities(const std::vector<Modality>& mods)
{
    unsigned bits = 0;
    for (auto m : mods) {
        bits |= bit(m);
    }
    const auto it = std::find(kComboBits.begin(), kComboBits.end(), bits);
    if (it == kComboBits.end()) {
        throw PreconditionError("modality combo must be non-empty");
    }
    return ModalityCombo(static_cast<int>(it - kComboBits.begin()) + 1);
}

ModalityCombo ModalityCombo::parse(const std::string& text)
{
    if (!text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return from_index(std::stoi(text));
    }
    std::vector<Modality> mods;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('+', start);
        const auto token = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
        bool found = false;
        for (auto m : kAllModalities) {
            if (token == modality_name(m) || token == modality_key(m)) {
                mods.push_back(m);
                found = true;
            }
        }
        if (!found) {
            throw PreconditionError("unknown modality '" + token + "' in combo '" + text + "'");
        }
        if (end == std::string::npos) {
            break;
        }
        start = end + 1;
    }
    return from_modalities(mods);
}

std::array<ModalityCombo, 7> ModalityCombo::all()
{
    return {ModalityCombo(1), ModalityCombo(2), ModalityCombo(3), ModalityCombo(4),
            ModalityCombo(5), ModalityCombo(6), ModalityCombo(7)};
}

bool ModalityCombo::contains(Modality m) const noexcept
{
    return (kComboBits[static_cast<std::size_t>(index_ - 1)] & bit(m)) != 0;
}

std::vector<Modality> ModalityCombo::modalities() const
{
    std::vector<Modality> out;
    for (auto m : kAllModalities) {
        if (contains(m)) {
            out.push_back(m);
        }
    }
    return out;
}

int ModalityCombo::channels() const noexcept
{
    int n = 0;
    for (auto m : kAllModalities) {
        n += contains(m) ? 1 : 0;
    }
    return n;
}

std::string ModalityCombo::name() const
{
    std::string out;
    for (auto m : modalities()) {
        if (!out.empty()) {
            out += '+';
        }
        out += modality_name(m);
    }
    return out;
}

} // namespace ricenet
