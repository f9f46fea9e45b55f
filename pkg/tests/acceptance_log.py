"""Collects acceptance outcomes so the terminal summary can print one line per criterion."""
RESULTS: dict[str, list[tuple[str, bool, str]]] = {}


def record(criterion: str, label: str, ok: bool, detail: str) -> None:
    RESULTS.setdefault(criterion, []).append((label, ok, detail))
    print(f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})")


def lines() -> list[str]:
    out = []
    for crit in sorted(RESULTS, key=int):
        parts = RESULTS[crit]
        ok = all(p[1] for p in parts)
        if len(parts) == 1:
            detail = parts[0][2]
        else:
            detail = "; ".join(f"{label} {'ok' if good else 'FAILED'}" for label, good, _ in parts)
        out.append(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
    return out
