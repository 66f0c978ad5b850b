#!/usr/bin/env python3
"""Fetch the LINQS Cora citation graph and convert it to the gnngp dataset layout.

The raw cora.content / cora.cites files ship inside the `pgl` wheel on PyPI, which
is reachable through ordinary pip mirrors. Output directory layout:

    edges.txt      one undirected edge per line (zero-based ids, deduplicated)
    features.bin   u64 rows, u64 cols, then row-major little-endian f64
    targets.txt    "# classification" header, one label per line
    classes.txt    label index -> subject name

No splits.json is written; use `gnngp make-splits --dataset DIR`.
"""

import argparse
import io
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile

WHEEL_SPEC = "pgl==2.2.6"
MEMBERS = ("pgl/data/cora/cora.content", "pgl/data/cora/cora.cites")


def download_wheel(dest: pathlib.Path) -> pathlib.Path:
    cmd = [sys.executable, "-m", "pip", "download", WHEEL_SPEC, "--no-deps",
           "--only-binary=:all:", "--python-version", "3.10", "--platform",
           "manylinux1_x86_64", "-d", str(dest), "-q",
           "--disable-pip-version-check"]
    subprocess.run(cmd, check=True)
    wheels = sorted(dest.glob("pgl-*.whl"))
    if not wheels:
        raise RuntimeError("pip download produced no pgl wheel")
    return wheels[0]


def read_raw(wheel: pathlib.Path | None, raw_dir: pathlib.Path | None):
    if raw_dir is not None:
        return ((raw_dir / "cora.content").read_text(), (raw_dir / "cora.cites").read_text())
    with zipfile.ZipFile(wheel) as zf:
        return tuple(zf.read(m).decode("utf-8") for m in MEMBERS)


def convert(content: str, cites: str, out: pathlib.Path) -> None:
    ids, rows, names = [], [], []
    for line in content.splitlines():
        parts = line.split()
        if not parts:
            continue
        ids.append(parts[0])
        rows.append([float(v) for v in parts[1:-1]])
        names.append(parts[-1])
    index = {paper: i for i, paper in enumerate(ids)}
    classes = sorted(set(names))
    labels = [classes.index(n) for n in names]

    edges = set()
    lines = 0
    for line in cites.splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        lines += 1
        i, j = index[parts[0]], index[parts[1]]
        if i != j:
            edges.add((min(i, j), max(i, j)))

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.txt", "w") as f:
        f.write(f"# cora: {len(ids)} nodes, {lines} citation lines, {len(edges)} undirected edges\n")
        for i, j in sorted(edges):
            f.write(f"{i} {j}\n")
    n, d = len(rows), len(rows[0])
    buf = io.BytesIO()
    buf.write(struct.pack("<QQ", n, d))
    for r in rows:
        buf.write(struct.pack(f"<{d}d", *r))
    (out / "features.bin").write_bytes(buf.getvalue())
    with open(out / "targets.txt", "w") as f:
        f.write("# classification\n")
        f.writelines(f"{l}\n" for l in labels)
    (out / "classes.txt").write_text("".join(f"{i} {c}\n" for i, c in enumerate(classes)))
    print(f"cora: {n} nodes, {d} features, {len(classes)} classes, "
          f"{lines} citation lines -> {len(edges)} undirected edges in {out}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=pathlib.Path, help="output dataset directory")
    ap.add_argument("--wheel", type=pathlib.Path, help="use an already downloaded pgl wheel")
    ap.add_argument("--raw", type=pathlib.Path, help="directory with cora.content and cora.cites")
    args = ap.parse_args()

    if (args.out / "features.bin").exists() and (args.out / "targets.txt").exists():
        print(f"cora already present in {args.out}")
        return 0
    try:
        if args.raw or args.wheel:
            content, cites = read_raw(args.wheel, args.raw)
        else:
            with tempfile.TemporaryDirectory() as tmp:
                content, cites = read_raw(download_wheel(pathlib.Path(tmp)), None)
    except (OSError, RuntimeError, subprocess.CalledProcessError, KeyError) as exc:
        print(f"fetch_cora: could not obtain the raw files: {exc}", file=sys.stderr)
        return 1
    convert(content, cites, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
