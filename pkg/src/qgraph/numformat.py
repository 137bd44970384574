"""Text form of complex scalars (``re+imi``) shared by file formats and the CLI."""

from __future__ import annotations


def format_float(x: float, sig: int = 15) -> str:
    return f"{float(x):.{sig}g}"


def format_complex(z: complex, sig: int = 15) -> str:
    """Render ``z`` as ``re+imi`` with an explicit sign on the imaginary part."""
    z = complex(z)
    return f"{z.real:.{sig}g}{z.imag:+.{sig}g}i"


def _split_imag(body: str) -> tuple[str, str] | None:
    # Find the sign separating the real and imaginary parts, skipping
    # exponent signs like the '-' in '1e-3'.
    for idx in range(len(body) - 1, 0, -1):
        if body[idx] in "+-" and body[idx - 1] not in "eE":
            return body[:idx], body[idx:]
    return None


def parse_complex(token: str) -> complex:
    """Parse ``re+imi``, a pure real or a pure imaginary token.

    Raises ValueError for anything else.
    """
    tok = token.strip().replace(" ", "")
    if not tok:
        raise ValueError("empty complex literal")
    if not tok.endswith("i"):
        return complex(float(tok), 0.0)
    body = tok[:-1]
    if body in ("", "+"):
        return complex(0.0, 1.0)
    if body == "-":
        return complex(0.0, -1.0)
    parts = _split_imag(body)
    if parts is None:
        return complex(0.0, float(body))
    re_part, im_part = parts
    if im_part in ("+", "-"):
        im = 1.0 if im_part == "+" else -1.0
    else:
        im = float(im_part)
    return complex(float(re_part), im)
