"""Fixed styling presets so rendered figures are deterministic."""

DPI = 200

BOUND_COLOR = "#d62728"        # the 2*pi*kB*T/hbar line
INSTANTON_COLOR = "#f26bc4"    # instanton geometry overlay
COMPACT_COLOR = "#1f77b4"      # low-r_g (compact) section points
EXTENDED_COLOR = "#b0b0b0"     # high-r_g (extended) section points
WARNING_COLOR = "#8a6d3b"

_BASE = {
    "figure.facecolor": "white",
    "savefig.facecolor": "white",
    "savefig.edgecolor": "none",
    "font.family": "DejaVu Sans",
    "mathtext.fontset": "dejavusans",
    "axes.linewidth": 0.8,
    "legend.frameon": False,
    "path.simplify": False,
}

PRESETS = {
    "paper": {
        **_BASE,
        "font.size": 9.0,
        "axes.titlesize": 9.5,
        "axes.labelsize": 9.0,
        "xtick.labelsize": 8.0,
        "ytick.labelsize": 8.0,
        "legend.fontsize": 8.0,
        "lines.linewidth": 1.2,
    },
    "slides": {
        **_BASE,
        "font.size": 13.0,
        "axes.titlesize": 14.0,
        "axes.labelsize": 13.0,
        "xtick.labelsize": 11.0,
        "ytick.labelsize": 11.0,
        "legend.fontsize": 11.0,
        "lines.linewidth": 1.8,
    },
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown style preset {name!r} "
            f"(presets: {', '.join(sorted(PRESETS))})") from None


PNG_METADATA = {"Software": "chaosbound-figures"}
