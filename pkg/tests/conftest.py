"""Shared fixtures: synthetic corpora plus an acceptance summary section."""

from __future__ import annotations

import random

import pytest

from vnspam import Corpus, Label, Message

# Promotional vocabulary for synthetic spam and a conversational one for ham.
# Drawn as unaccented Vietnamese so entity tagging sees realistic shapes.
SPAM_WORDS = (
    "khuyen mai giam gia trung thuong mien phi qua tang soan tin nhan ngay "
    "uu dai nap the dang ky dich vu sieu khung vay von nhanh co hoi truy "
    "cap lien he tong dai"
).split()
HAM_WORDS = (
    "anh em di an com chua hom nay hop luc ve nha muon ngu roi ban oi gap "
    "nhe toi mai sang lam viec met vui buon cafe xem phim bong the nao khoe "
    "khong duoc cho minh voi nho mua giup sach truong hoc bai tap"
).split()


def synth_corpus(n: int, seed: int, spam_ratio: float = 0.3, tag_spam: bool = False) -> Corpus:
    """Seeded synthetic SMS corpus.

    Spam draws from the promotional pool and usually carries a phone number,
    a price or a link; ham draws from the conversational pool and never
    contains brackets. With tag_spam every spam message opens with one of
    the four operator ad tags.
    """
    rng = random.Random(seed)
    msgs = []
    for i in range(n):
        if rng.random() < spam_ratio:
            words = rng.choices(SPAM_WORDS, k=rng.randint(8, 16))
            if rng.random() < 0.7:
                words.append(rng.choice([
                    "0" + "".join(rng.choices("0123456789", k=9)),
                    "19001" + "".join(rng.choices("0123456789", k=3)),
                ]))
            if rng.random() < 0.5:
                words.append(f"{rng.randint(10, 500)}k")
            if rng.random() < 0.4:
                words.append("www." + rng.choice(["abc", "xyz", "shop"]) + ".vn")
            if tag_spam:
                words.insert(0, rng.choice(["[QC]", "(QC)", "[TB]", "(TB)"]))
            label = Label.SPAM
        else:
            words = rng.choices(HAM_WORDS, k=rng.randint(4, 12))
            label = Label.LEGITIMATE
        msgs.append(Message(id=i, text=" ".join(words), label=label))
    return Corpus(msgs)


@pytest.fixture(scope="session")
def small_corpus() -> Corpus:
    return synth_corpus(240, seed=11)


# -- acceptance summary ----------------------------------------------------
# One line per acceptance test at the end of any run that executed them.

_ACCEPTANCE: dict[str, tuple[str, float]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.skipped):
        if report.passed:
            outcome = "PASS"
        elif report.failed:
            outcome = "FAIL"
        else:
            outcome = "SKIP"
        _ACCEPTANCE[name] = (outcome, getattr(report, "duration", 0.0))
    elif report.when != "call" and report.failed:
        _ACCEPTANCE[name] = ("FAIL", getattr(report, "duration", 0.0))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for name, (outcome, duration) in _ACCEPTANCE.items():
        terminalreporter.write_line(f"{name}: {outcome} ({duration:.2f}s)")
