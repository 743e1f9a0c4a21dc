# 感知子空间码工具包
