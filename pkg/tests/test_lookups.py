from __future__ import annotations

import pandas as pd

from motionbev.lookups import list_fusion_strategies, list_radar_attributes


def test_list_fusion_strategies_shape_order_and_mappings() -> None:
    dataframe = list_fusion_strategies()

    assert isinstance(dataframe, pd.DataFrame)
    assert list(dataframe.columns) == ["strategy_code", "expression", "required_modalities"]
    assert list(dataframe["strategy_code"]) == [
        "concat",
        "mdca_cr_cat_l",
        "mdca_cl_cat_r",
        "mdca_c_over_lr",
    ]

    required = {row.strategy_code: row.required_modalities for row in dataframe.itertuples(index=False)}
    assert required["concat"] == ""
    assert required["mdca_c_over_lr"] == "camera+radar+lidar"


def test_list_radar_attributes_covers_eighteen_columns() -> None:
    dataframe = list_radar_attributes()

    assert list(dataframe.columns) == ["column", "attribute", "description"]
    assert len(dataframe) == 18
    assert list(dataframe["column"]) == [str(i) for i in range(18)]
    assert dataframe.iloc[0]["attribute"] == "x"
