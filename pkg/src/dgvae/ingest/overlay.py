"""Parser for OVERLAY-style lesion annotation files.

Accepted grammar (keyword-keyed, one record set per file):

    TOTAL_ABNORMALITIES <n>
    ABNORMALITY <k>
    LESION_TYPE MASS SHAPE <atoms> MARGINS <atoms>
    ASSESSMENT <int>        (optional)
    SUBTLETY <int>          (optional)
    PATHOLOGY <token>
    TOTAL_OUTLINES <m>      (optional, with m outline sections)
    BOUNDARY
    <start_col start_row code... #>

Shape atoms: ROUND (alias CIRCLE), OVAL, IRREGULAR, LOBULATED.  Margin
atoms: CIRCUMSCRIBED, OBSCURED, ILL_DEFINED, SPICULATED, MICROLOBULATED.
LOBULATED/MICROLOBULATED set the lobulation flag, SPICULATED the
spiculation flag.  Atoms may be separated by spaces or hyphens.  The
parser keys on keywords rather than line positions, so annotation lines
may appear in any order within an abnormality section.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import OverlayParseError

SHAPE_ATOMS = {
    "ROUND": "circle",
    "CIRCLE": "circle",
    "OVAL": "oval",
    "IRREGULAR": "irregular",
    "LOBULATED": None,
}
MARGIN_ATOMS = {
    "CIRCUMSCRIBED": "circumscribed",
    "OBSCURED": "obscured",
    "ILL_DEFINED": "ill-defined",
    "SPICULATED": "spiculated",
    "MICROLOBULATED": None,
}
PATHOLOGY_ATOMS = {
    "BENIGN": "benign",
    "BENIGN_WITHOUT_CALLBACK": "benign",
    "MALIGNANT": "malignant",
}
LESION_KEYWORDS = ("LESION_TYPE", "SHAPE", "MARGINS", "TYPE", "DISTRIBUTION")

# chain-code directions as (row, col) steps, index 0..7 = N NE E SE S SW W NW
CHAIN_STEPS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


@dataclass(frozen=True)
class Outline:
    name: str
    start_col: int
    start_row: int
    chain: tuple

    def path(self):
        """Visited (row, col) points including the start."""
        points = [(self.start_row, self.start_col)]
        r, c = points[0]
        for code in self.chain:
            dr, dc = CHAIN_STEPS[code]
            r, c = r + dr, c + dc
            points.append((r, c))
        return np.asarray(points, dtype=np.int64)

    def bounding_box(self):
        """Inclusive (row0, col0, row1, col1) box around the outline."""
        pts = self.path()
        return (
            int(pts[:, 0].min()),
            int(pts[:, 1].min()),
            int(pts[:, 0].max()),
            int(pts[:, 1].max()),
        )


@dataclass
class LesionAnnotation:
    case_id: str
    index: int
    lesion_type: str
    fields: tuple  # ordered (keyword, atom tuple) pairs from the LESION_TYPE line
    shape: str
    margin: str
    lobulated: bool
    spiculated: bool
    pathology: str
    pathology_token: str
    assessment: int = None
    subtlety: int = None
    outlines: tuple = field(default_factory=tuple)

    @property
    def boundary(self):
        for outline in self.outlines:
            if outline.name == "BOUNDARY":
                return outline
        return None


def _atoms(tokens):
    out = []
    for token in tokens:
        out.extend(part for part in token.split("-") if part)
    return tuple(out)


def _split_fields(tokens, line_no):
    fields = []
    current = None
    for token in tokens:
        if token in LESION_KEYWORDS:
            current = (token, [])
            fields.append(current)
        else:
            if current is None:
                raise OverlayParseError(f"line {line_no}: unexpected token {token!r} before a keyword")
            current[1].append(token)
    return tuple((kw, tuple(vals)) for kw, vals in fields)


def _interpret_mass_fields(fields, line_no):
    shape = None
    margin = None
    lobulated = False
    spiculated = False
    for keyword, tokens in fields:
        if keyword == "SHAPE":
            for atom in _atoms(tokens):
                if atom not in SHAPE_ATOMS:
                    raise OverlayParseError(
                        f"line {line_no}: unknown shape token {atom!r}; "
                        f"vocabulary: {sorted(SHAPE_ATOMS)}"
                    )
                if atom == "LOBULATED":
                    lobulated = True
                elif shape is None:
                    shape = SHAPE_ATOMS[atom]
        elif keyword == "MARGINS":
            for atom in _atoms(tokens):
                if atom not in MARGIN_ATOMS:
                    raise OverlayParseError(
                        f"line {line_no}: unknown margin token {atom!r}; "
                        f"vocabulary: {sorted(MARGIN_ATOMS)}"
                    )
                if atom == "MICROLOBULATED":
                    lobulated = True
                    continue
                if atom == "SPICULATED":
                    spiculated = True
                if margin is None:
                    margin = MARGIN_ATOMS[atom]
    return shape, margin, lobulated, spiculated


class _Lines:
    def __init__(self, text):
        self.items = [
            (no + 1, line.strip()) for no, line in enumerate(text.splitlines()) if line.strip()
        ]
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else (None, None)

    def next(self):
        item = self.peek()
        self.pos += 1
        return item

    @property
    def done(self):
        return self.pos >= len(self.items)


def _int_after(keyword, line, line_no):
    parts = line.split()
    if len(parts) != 2:
        raise OverlayParseError(f"line {line_no}: expected '{keyword} <int>', got {line!r}")
    try:
        return int(parts[1])
    except ValueError:
        raise OverlayParseError(f"line {line_no}: {keyword} value {parts[1]!r} is not an integer") from None


def _parse_outlines(lines, count):
    outlines = []
    for _ in range(count):
        line_no, name_line = lines.next()
        if name_line is None or name_line.split()[0] in ("ABNORMALITY",):
            raise OverlayParseError(f"line {line_no}: expected an outline name, found end of section")
        name = name_line.split()[0]
        tokens = name_line.split()[1:]
        while "#" not in tokens:
            chain_no, chain_line = lines.next()
            if chain_line is None:
                raise OverlayParseError(f"outline {name!r}: chain code not terminated with '#'")
            tokens.extend(chain_line.split())
        tokens = tokens[: tokens.index("#")]
        if len(tokens) < 2:
            raise OverlayParseError(f"outline {name!r}: needs a start point before the chain code")
        try:
            values = [int(t) for t in tokens]
        except ValueError:
            raise OverlayParseError(f"outline {name!r}: non-integer chain token") from None
        chain = tuple(values[2:])
        if any(not 0 <= c <= 7 for c in chain):
            raise OverlayParseError(f"outline {name!r}: chain codes must lie in 0..7")
        outlines.append(Outline(name=name, start_col=values[0], start_row=values[1], chain=chain))
    return tuple(outlines)


def parse_overlay(text, case_id=""):
    """Parse one OVERLAY record set; returns a list of LesionAnnotation."""
    lines = _Lines(text)
    if lines.done:
        return []
    line_no, header = lines.next()
    if not header.startswith("TOTAL_ABNORMALITIES"):
        raise OverlayParseError(f"line {line_no}: expected TOTAL_ABNORMALITIES header, got {header!r}")
    declared = _int_after("TOTAL_ABNORMALITIES", header, line_no)

    annotations = []
    while not lines.done:
        line_no, line = lines.next()
        if not line.startswith("ABNORMALITY"):
            raise OverlayParseError(f"line {line_no}: expected ABNORMALITY section, got {line!r}")
        index = _int_after("ABNORMALITY", line, line_no)
        fields = None
        fields_line_no = None
        pathology_token = None
        assessment = None
        subtlety = None
        outlines = ()
        while not lines.done and not lines.peek()[1].startswith("ABNORMALITY"):
            entry_no, entry = lines.next()
            key = entry.split()[0]
            if key == "LESION_TYPE":
                fields = _split_fields(entry.split(), entry_no)
                fields_line_no = entry_no
            elif key == "ASSESSMENT":
                assessment = _int_after("ASSESSMENT", entry, entry_no)
            elif key == "SUBTLETY":
                subtlety = _int_after("SUBTLETY", entry, entry_no)
            elif key == "PATHOLOGY":
                parts = entry.split()
                if len(parts) != 2:
                    raise OverlayParseError(f"line {entry_no}: expected 'PATHOLOGY <token>'")
                pathology_token = parts[1]
                if pathology_token not in PATHOLOGY_ATOMS:
                    raise OverlayParseError(
                        f"line {entry_no}: unknown pathology {pathology_token!r}; "
                        f"vocabulary: {sorted(PATHOLOGY_ATOMS)}"
                    )
            elif key == "TOTAL_OUTLINES":
                outlines = _parse_outlines(lines, _int_after("TOTAL_OUTLINES", entry, entry_no))
            else:
                raise OverlayParseError(f"line {entry_no}: unrecognized entry {entry!r}")

        if fields is None:
            raise OverlayParseError(
                f"abnormality {index} (near line {line_no}): missing LESION_TYPE line"
            )
        if pathology_token is None:
            raise OverlayParseError(
                f"abnormality {index} (near line {line_no}): missing PATHOLOGY line"
            )
        lesion_tokens = dict(fields).get("LESION_TYPE", ())
        if not lesion_tokens:
            raise OverlayParseError(f"line {fields_line_no}: LESION_TYPE carries no value")
        lesion_type = lesion_tokens[0].lower()
        if lesion_type == "mass":
            shape, margin, lobulated, spiculated = _interpret_mass_fields(fields, fields_line_no)
        else:
            shape, margin, lobulated, spiculated = None, None, False, False
        annotations.append(
            LesionAnnotation(
                case_id=case_id,
                index=index,
                lesion_type=lesion_type,
                fields=fields,
                shape=shape,
                margin=margin,
                lobulated=lobulated,
                spiculated=spiculated,
                pathology=PATHOLOGY_ATOMS[pathology_token],
                pathology_token=pathology_token,
                assessment=assessment,
                subtlety=subtlety,
                outlines=outlines,
            )
        )

    if len(annotations) != declared:
        raise OverlayParseError(
            f"declared {declared} abnormalities but parsed {len(annotations)}"
        )
    return annotations


def parse_overlay_file(path):
    from pathlib import Path

    path = Path(path)
    case_id = path.name
    for suffix in (".OVERLAY", ".overlay", ".txt"):
        if case_id.endswith(suffix):
            case_id = case_id[: -len(suffix)]
            break
    return parse_overlay(path.read_text(encoding="utf-8"), case_id=case_id)


def serialize_annotations(annotations):
    """Write annotations back in the canonical grammar."""
    out = [f"TOTAL_ABNORMALITIES {len(annotations)}"]
    for ann in annotations:
        out.append(f"ABNORMALITY {ann.index}")
        out.append(" ".join(kw + ("" if not vals else " " + " ".join(vals)) for kw, vals in ann.fields))
        if ann.assessment is not None:
            out.append(f"ASSESSMENT {ann.assessment}")
        if ann.subtlety is not None:
            out.append(f"SUBTLETY {ann.subtlety}")
        out.append(f"PATHOLOGY {ann.pathology_token}")
        if ann.outlines:
            out.append(f"TOTAL_OUTLINES {len(ann.outlines)}")
            for outline in ann.outlines:
                out.append(outline.name)
                chain = " ".join(str(c) for c in outline.chain)
                head = f"{outline.start_col} {outline.start_row}"
                out.append(f"{head} {chain} #" if chain else f"{head} #")
    return "\n".join(out) + "\n"
