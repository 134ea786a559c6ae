# Sperner package
