#pragma once

#include <array>
#include <string>
#include <vector>

namespace ricenet {

// Input volumes available per subject, in canonical channel order.
enum class Modality : int { PostOp = 0, Event = 1, Dose = 2 };

inline constexpr std::array<Modality, 3> kAllModalities{Modality::PostOp, Modality::Event, Modality::Dose};

const char* modality_key(Modality m) noexcept; // "post_op" / "event" / "dose"
const char* modality_name(Modality m) noexcept; // "POST_OP" / "EVENT" / "DOSE"

// One of the seven non-empty subsets of {POST_OP, EVENT, DOSE}. Canonical
// index: 1 POST_OP, 2 EVENT, 3 DOSE, 4 POST_OP+EVENT, 5 POST_OP+DOSE,
// 6 EVENT+DOSE, 7 all three.
class ModalityCombo {
public:
    static ModalityCombo from_index(int canonical_index);
    static ModalityCombo from_modalities(const std::vector<Modality>& mods);
    // Accepts the canonical index ("5") or a '+'-joined name ("POST_OP+DOSE").
    static ModalityCombo parse(const std::string& text);
    static std::array<ModalityCombo, 7> all();

    int index() const noexcept { return index_; }
    bool contains(Modality m) const noexcept;
    // Selected modalities in canonical channel order.
    std::vector<Modality> modalities() const;
    int channels() const noexcept;
    std::string name() const;

    friend bool operator==(const ModalityCombo&, const ModalityCombo&) = default;

private:
    explicit ModalityCombo(int index) : index_(index) {}
    int index_;
};

} // namespace ricenet
