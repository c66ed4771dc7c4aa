"""Freeze textstat Flesch Reading Ease scores for fres_texts.txt.

textstat 0.7.13 reads the CMU pronouncing dictionary through NLTK; the
dictionary is taken from the `cmudict` package so no NLTK download is needed.

    pip install textstat==0.7.13 cmudict
    python3 gen_fres_fixtures.py fres_texts.txt > fres_reference.json
    python3 gen_fres_fixtures.py fres_divergence_texts.txt > fres_divergence.json
"""
import json
import pathlib
import sys
import types

import cmudict
import nltk

nltk.data.find = lambda *args, **kwargs: None
nltk.corpus.cmudict = types.SimpleNamespace(dict=cmudict.dict)

import textstat  # noqa: E402

source = pathlib.Path(__file__).parent / sys.argv[1]
texts = [t for t in source.read_text().splitlines() if t.strip()]
print(json.dumps({
    "tool": "textstat " + ".".join(map(str, textstat.__version__)),
    "texts": [{"text": t, "fres": textstat.flesch_reading_ease(t)} for t in texts],
}, indent=2))
