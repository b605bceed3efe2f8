from enum import IntEnum

from form_rumor.exceptions import UnknownLabelError


class RumorLabel(IntEnum):
    """Four-way veracity label. The integer codes are fixed project-wide."""

    FALSE_RUMOR = 0
    TRUE_RUMOR = 1
    UNVERIFIED = 2
    NON_RUMOR = 3

    def __str__(self):
        return label_strs[self]

    @property
    def short_name(self) -> str:
        return short_names[self]

    @classmethod
    def parse(cls, value) -> "RumorLabel":
        if isinstance(value, int) and not isinstance(value, bool):
            if value in cls._value2member_map_:
                return cls(value)
            raise UnknownLabelError(str(value), labels)
        try:
            return str_label_map[value.strip().lower()]
        except KeyError:
            raise UnknownLabelError(value, labels)


label_strs = {
    RumorLabel.FALSE_RUMOR: "false",
    RumorLabel.TRUE_RUMOR: "true",
    RumorLabel.UNVERIFIED: "unverified",
    RumorLabel.NON_RUMOR: "non-rumor",
}

# Column headers of the comparison table
short_names = {
    RumorLabel.FALSE_RUMOR: "F",
    RumorLabel.TRUE_RUMOR: "T",
    RumorLabel.UNVERIFIED: "U",
    RumorLabel.NON_RUMOR: "NR",
}

str_label_map = {v: k for k, v in label_strs.items()}

labels = tuple(label_strs[label] for label in RumorLabel)
