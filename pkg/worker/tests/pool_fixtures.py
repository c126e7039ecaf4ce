"""Shared test data for the worker suites.

Lives in its own module (not conftest) so test files can import it by name
even when these tests run from the repository root alongside other suites.
"""

LABELS = ("positive", "negative", "neutral")

# disjoint per-label vocabularies make the pool linearly separable in hashed
# bag-of-words space (modulo the vanishing chance of a bucket collision)
VOCAB = {
    "positive": ["wonderful", "delightful", "superb", "charming", "excellent"],
    "negative": ["terrible", "awful", "rude", "dreadful", "nasty"],
    "neutral": ["average", "ordinary", "plain", "standard", "typical"],
}


def separable_pool(n=50):
    pool = []
    for i in range(n):
        label = LABELS[i % 3]
        words = VOCAB[label]
        text = f"{words[i % 5]} {words[(i + 1) % 5]} {words[(i + 2) % 5]}"
        pool.append({"text": text, "label": label})
    return pool
