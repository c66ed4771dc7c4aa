"""Plain-text transcriptions of the example boxes plus whitespace-split word counts.

    python3 gen_text_fixtures.py SOURCE.md
"""
import json
import pathlib
import re
import sys

here = pathlib.Path(__file__).parent
lines = pathlib.Path(sys.argv[1]).read_text().splitlines()


def box(title):
    i = next(k for k, line in enumerate(lines) if title in line)
    body = re.sub(r"\\AOA\{(.*)\}$", r"\1", lines[i + 1].strip())
    for _ in range(3):
        body = re.sub(r"\\text(bf|it)\{([^{}]*)\}", r"\2", body)
    return body.replace("`", "'").strip()


out = {
    "worked_example_l3": box("Example of an ontology-based narrative"),
    "worked_example_explanation": box("Example of an LLM-based explanation"),
    "system_prompt": box("System prompt instructions"),
}
for name, text in out.items():
    (here / f"{name}.txt").write_text(text + "\n")
(here / "word_counts.json").write_text(
    json.dumps({name: len(text.split()) for name, text in out.items()}, indent=1) + "\n")
