import pytest

from cprdraft.cards import (
    Card,
    CardDatabase,
    CardDatabaseError,
    Rarity,
    generate_synthetic_database,
    load_card_database,
    save_card_database,
)


def test_synthetic_database_layout(db30):
    assert len(db30) == 30
    assert [c.id for c in db30] == list(range(30))
    counts = {r: len(db30.rarity_ids(r)) for r in Rarity}
    assert counts[Rarity.COMMON] == 16
    assert counts[Rarity.UNCOMMON] == 8
    assert counts[Rarity.RARE] == 4
    assert counts[Rarity.MYTHIC] == 2
    names = [c.name for c in db30]
    assert len(set(names)) == 30


def test_synthetic_database_deterministic():
    a = generate_synthetic_database(30, seed=0)
    b = generate_synthetic_database(30, seed=0)
    assert a == b
    assert a.fingerprint() == b.fingerprint()
    c = generate_synthetic_database(30, seed=1)
    assert c.fingerprint() != a.fingerprint()


def test_synthetic_database_color_mix(db30):
    """The generator sprinkles in colorless and two-color cards."""
    assert any(card.is_colorless for card in db30)
    assert any(card.is_multicolored for card in db30)
    assert any(len(card.colors) == 1 for card in db30)


def test_roundtrip(tmp_path, db30):
    path = tmp_path / "cards.csv"
    save_card_database(db30, path)
    again = load_card_database(path)
    assert again == db30
    assert again.fingerprint() == db30.fingerprint()


def test_color_matrix(db30):
    m = db30.color_matrix
    assert m.shape == (30, 5)
    for card in db30:
        row = m[card.id]
        assert row.sum() == len(card.colors)
    with pytest.raises(ValueError):
        m[0, 0] = 5.0  # read-only view


def test_color_token_and_class_conventions():
    mono = Card(id=0, name="a", colors=frozenset("W"), rarity=Rarity.COMMON)
    none = Card(id=1, name="b", colors=frozenset(), rarity=Rarity.COMMON)
    dual = Card(id=2, name="c", colors=frozenset("UW"), rarity=Rarity.RARE)
    assert mono.color_token == "W" and mono.color_class == "W"
    assert none.is_colorless and none.color_token == ""
    assert none.color_class == "colorless"
    assert dual.is_multicolored and dual.color_class == "multicolor"
    assert dual.color_token == "WU"  # canonical WUBRG order, not alphabetical


def test_card_rejects_unknown_color_letter():
    with pytest.raises(ValueError):
        Card(id=0, name="bad", colors=frozenset("X"), rarity=Rarity.COMMON)


def test_database_requires_contiguous_ids():
    cards = [
        Card(id=0, name="a", colors=frozenset("W"), rarity=Rarity.COMMON),
        Card(id=2, name="b", colors=frozenset("U"), rarity=Rarity.UNCOMMON),
        Card(id=3, name="c", colors=frozenset("B"), rarity=Rarity.RARE),
        Card(id=4, name="d", colors=frozenset("R"), rarity=Rarity.MYTHIC),
    ]
    with pytest.raises(CardDatabaseError):
        CardDatabase(cards)


def test_database_requires_each_rarity():
    cards = [
        Card(id=i, name=f"c{i}", colors=frozenset("W"), rarity=Rarity.COMMON)
        for i in range(4)
    ]
    with pytest.raises(CardDatabaseError):
        CardDatabase(cards)


def test_database_rejects_duplicate_names():
    cards = [
        Card(id=0, name="same", colors=frozenset("W"), rarity=Rarity.COMMON),
        Card(id=1, name="same", colors=frozenset("U"), rarity=Rarity.UNCOMMON),
        Card(id=2, name="c", colors=frozenset("B"), rarity=Rarity.RARE),
        Card(id=3, name="d", colors=frozenset("R"), rarity=Rarity.MYTHIC),
    ]
    with pytest.raises(CardDatabaseError):
        CardDatabase(cards)


def _write(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text, encoding="utf-8")
    return path


def test_load_rejects_wrong_header(tmp_path):
    path = _write(tmp_path, "id,name,rarity\n0,a,common\n")
    with pytest.raises(CardDatabaseError):
        load_card_database(path)


def test_load_rejects_empty_database(tmp_path):
    path = _write(tmp_path, "id,name,colors,rarity\n")
    with pytest.raises(CardDatabaseError, match="empty"):
        load_card_database(path)


def test_load_rejects_bad_rarity_with_line_number(tmp_path):
    path = _write(
        tmp_path,
        "id,name,colors,rarity\n"
        "0,a,W,common\n0?\n".replace("0?", "1,b,U,shiny"),
    )
    with pytest.raises(CardDatabaseError, match="line 3"):
        load_card_database(path)


def test_load_rejects_duplicate_id_with_line_number(tmp_path):
    path = _write(
        tmp_path,
        "id,name,colors,rarity\n0,a,W,common\n0,b,U,uncommon\n",
    )
    with pytest.raises(CardDatabaseError, match="line 3"):
        load_card_database(path)


def test_load_rejects_bad_colors(tmp_path):
    path = _write(tmp_path, "id,name,colors,rarity\n0,a,WZ,common\n")
    with pytest.raises(CardDatabaseError):
        load_card_database(path)


def test_by_name(db30):
    card = db30[7]
    assert db30.by_name(card.name) == card
    with pytest.raises(KeyError):
        db30.by_name("No Such Card")


def test_generate_respects_size_bounds():
    with pytest.raises(ValueError):
        generate_synthetic_database(n_cards=3, seed=0)
    big = generate_synthetic_database(n_cards=60, seed=2)
    assert len(big) == 60
    for r in Rarity:
        assert len(big.rarity_ids(r)) >= 1
